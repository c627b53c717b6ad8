#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "peerbargain/market_model.hpp"

namespace peerbargain {

enum class PeeringAction { establish, remove };

struct PeeringEvent {
  std::string isp;
  std::string csp;
  std::vector<std::string> services;  // empty = every service the CSP offers
  PeeringAction action = PeeringAction::establish;

  bool operator==(const PeeringEvent&) const = default;
};

/// Customers of one type moving from `from_isp` to `to_isp` (type unchanged).
struct IspChurnFlow {
  std::size_t from_isp = 0;
  std::size_t to_isp = 0;
  std::size_t type = 0;
  double source_count = 0.0;
  double rate = 0.0;  // (1 - beta(from_isp)) * h(s)
  double amount = 0.0;
};

/// Customers inside one ISP switching their preferred-service provider.
struct CspChurnFlow {
  std::size_t isp = 0;
  std::size_t service = 0;
  std::size_t from_csp = 0;
  std::size_t to_csp = 0;
  std::size_t from_type = 0;
  std::size_t to_type = 0;
  double source_count = 0.0;
  double rate = 0.0;  // (1 - theta(from_csp)) * g(s)
  double amount = 0.0;
};

template <typename Flow>
struct PhaseOutcome {
  MarketState state;
  std::vector<Flow> flows;
};

struct ChurnReport {
  std::size_t isp = 0;
  std::size_t csp = 0;
  std::vector<std::size_t> services;  // newly premium services, dataset order
  std::vector<IspChurnFlow> phase1;
  std::vector<CspChurnFlow> phase2;
  std::shared_ptr<const MarketState> pre;
  std::shared_ptr<const MarketState> post;

  double phase1_total() const;
  double phase2_total() const;
};

/// Service indices named by `event`, or all services the CSP has a positive
/// share in when the list is empty. Throws ModelError for unknown ids and for
/// services the CSP does not offer.
std::vector<std::size_t> resolve_event_services(const Market& market, const PeeringEvent& event);

/// ISP churn towards `j`. Flow sizes are computed on `state`, then applied at once.
PhaseOutcome<IspChurnFlow> phase1_churn(const MarketState& state, std::size_t j, std::size_t x,
                                        std::span<const std::size_t> services);

/// CSP churn towards `x` inside ISP `i`, computed on `state`, applied at once.
PhaseOutcome<CspChurnFlow> phase2_churn(const MarketState& state, std::size_t i, std::size_t x,
                                        std::span<const std::size_t> services);

/// Runs both phases for the services not yet premium on (isp, csp) and records
/// them in the ledger. Nothing new to add yields an empty report and the same state.
ChurnReport establish_peering(const MarketState& state, std::size_t isp, std::size_t csp,
                              std::span<const std::size_t> services);
ChurnReport establish_peering(const MarketState& state, const PeeringEvent& event);

struct SequenceOutcome {
  MarketState state;
  std::vector<ChurnReport> reports;
};

SequenceOutcome simulate_sequence(const MarketState& state, std::span<const PeeringEvent> events);

nlohmann::ordered_json report_to_json(const ChurnReport& report, bool include_flows);

}  // namespace peerbargain
