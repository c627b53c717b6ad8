#pragma once

// Brute-force reference for market initialization and churn. Works on an
// explicit map of customer types and applies each transition rule literally,
// without the engine's type-space indexing.

#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "peerbargain/churn_engine.hpp"
#include "peerbargain/market_model.hpp"

namespace oracle {

inline constexpr int kNone = -1;

struct TypeKey {
  std::size_t isp = 0;
  std::size_t preferred = 0;
  std::vector<int> providers;  // per service: csp index or kNone

  auto operator<=>(const TypeKey&) const = default;
};

struct State {
  std::map<TypeKey, double> counts;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> premium;  // (isp, csp, service)
};

/// Same rounding rule the engine documents: nearest multiple of 2^-16.
double snap(double value);

State initialize(const peerbargain::Market& market);

/// One peering event, both phases, rule by rule.
void establish(const peerbargain::Market& market, State& state, std::size_t isp, std::size_t csp,
               const std::vector<std::size_t>& services);

/// Engine state in oracle form, keyed through TypeSpace::describe.
State from_engine(const peerbargain::MarketState& state);

/// Empty string when equal, otherwise a description of the first mismatch.
std::string compare(const peerbargain::Market& market, const State& expected, const State& actual);

struct RandomMarketOptions {
  std::size_t min_isps = 1, max_isps = 3;
  std::size_t min_csps = 1, max_csps = 3;
  std::size_t min_services = 1, max_services = 3;
};

peerbargain::Market random_market(std::mt19937_64& rng, const RandomMarketOptions& options = {});

/// Events over non-passive ISPs with random service subsets (empty = all).
std::vector<peerbargain::PeeringEvent> random_events(const peerbargain::Market& market, std::mt19937_64& rng,
                                                     std::size_t count);

}  // namespace oracle
