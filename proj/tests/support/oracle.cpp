#include "oracle.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace oracle {

using peerbargain::Market;

double snap(double value) { return std::ldexp(std::nearbyint(std::ldexp(value, 16)), -16); }

namespace {

// Provider options for one service, declaration order, NONE last when some
// users are left uncovered.
std::vector<std::pair<int, double>> options_for(const Market& market, std::size_t s) {
  std::vector<std::pair<int, double>> out;
  double covered = 0.0;
  for (std::size_t x = 0; x < market.csps.size(); ++x) {
    auto it = market.csps[x].service_shares.find(market.services[s].id);
    if (it != market.csps[x].service_shares.end() && it->second > 0.0) {
      out.emplace_back(static_cast<int>(x), it->second);
      covered += it->second;
    }
  }
  if (1.0 - covered > 1e-9) out.emplace_back(kNone, 1.0 - covered);
  return out;
}

void enumerate(const std::vector<std::vector<std::pair<int, double>>>& options, std::size_t k,
               std::vector<int>& providers, std::vector<double>& shares,
               const std::function<void(const std::vector<int>&, const std::vector<double>&)>& visit) {
  if (k == options.size()) {
    visit(providers, shares);
    return;
  }
  for (const auto& [csp, share] : options[k]) {
    providers.push_back(csp);
    shares.push_back(share);
    enumerate(options, k + 1, providers, shares, visit);
    providers.pop_back();
    shares.pop_back();
  }
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  for (auto e : v)
    if (e == x) return true;
  return false;
}

}  // namespace

State initialize(const Market& market) {
  std::vector<std::vector<std::pair<int, double>>> options;
  for (std::size_t s = 0; s < market.services.size(); ++s) options.push_back(options_for(market, s));

  State state;
  for (std::size_t i = 0; i < market.isps.size(); ++i) {
    for (std::size_t pref = 0; pref < market.services.size(); ++pref) {
      std::vector<int> providers;
      std::vector<double> shares;
      enumerate(options, 0, providers, shares, [&](const std::vector<int>& p, const std::vector<double>& sh) {
        double n = market.isps[i].subscribers * market.services[pref].importance_weight;
        for (double f : sh) n *= f;
        state.counts[TypeKey{i, pref, p}] = snap(n);
      });
    }
  }
  return state;
}

void establish(const Market& market, State& state, std::size_t j, std::size_t x,
               const std::vector<std::size_t>& requested) {
  std::vector<std::size_t> services;
  for (auto s : requested)
    if (!state.premium.count({j, x, s}) && !contains(services, s)) services.push_back(s);
  if (services.empty()) return;

  // Phase 1: customers of other ISPs whose preferred service is now premium
  // at j through x follow it to j.
  std::vector<std::tuple<TypeKey, TypeKey, double>> moves;
  for (const auto& [key, n] : state.counts) {
    if (key.isp == j || !contains(services, key.preferred)) continue;
    if (key.providers[key.preferred] != static_cast<int>(x)) continue;
    if (state.premium.count({key.isp, x, key.preferred})) continue;
    const double rate = (1.0 - market.isps[key.isp].loyalty) * market.services[key.preferred].isp_churn_prob;
    TypeKey to = key;
    to.isp = j;
    moves.emplace_back(key, to, snap(n * rate));
  }
  for (const auto& [from, to, amount] : moves) {
    state.counts[from] -= amount;
    state.counts[to] += amount;
  }

  // Phase 2: inside j, customers of a rival provider of their preferred
  // service switch to x.
  moves.clear();
  for (const auto& [key, n] : state.counts) {
    if (key.isp != j || !contains(services, key.preferred)) continue;
    const int y = key.providers[key.preferred];
    if (y == kNone || y == static_cast<int>(x)) continue;
    if (state.premium.count({j, static_cast<std::size_t>(y), key.preferred})) continue;
    const double rate = (1.0 - market.csps[y].loyalty) * market.services[key.preferred].csp_churn_prob;
    TypeKey to = key;
    to.providers[key.preferred] = static_cast<int>(x);
    moves.emplace_back(key, to, snap(n * rate));
  }
  for (const auto& [from, to, amount] : moves) {
    state.counts[from] -= amount;
    state.counts[to] += amount;
  }

  for (auto s : services) state.premium.insert({j, x, s});
}

State from_engine(const peerbargain::MarketState& engine) {
  const Market& market = engine.market();
  State out;
  for (std::size_t i = 0; i < market.isps.size(); ++i) {
    for (std::size_t t = 0; t < engine.types().types_per_isp(); ++t) {
      const auto ct = engine.types().describe(market, i, t);
      TypeKey key{i, *market.find_service(ct.preferred_service), {}};
      for (const auto& [service, provider] : ct.providers) {
        key.providers.push_back(provider == peerbargain::kNoProvider ? kNone
                                                                     : static_cast<int>(*market.find_csp(provider)));
      }
      out.counts[key] = engine.count(i, t);
    }
  }
  for (const auto& [pair, services] : engine.ledger().entries()) {
    for (auto s : services) out.premium.insert({pair.first, pair.second, s});
  }
  return out;
}

std::string compare(const Market& market, const State& expected, const State& actual) {
  auto describe = [&](const TypeKey& k) {
    std::ostringstream os;
    os << market.isps[k.isp].id << "/" << market.services[k.preferred].id << "/(";
    for (std::size_t s = 0; s < k.providers.size(); ++s)
      os << (s ? "," : "") << (k.providers[s] == kNone ? "NONE" : market.csps[k.providers[s]].id);
    os << ")";
    return os.str();
  };
  if (expected.counts.size() != actual.counts.size()) {
    return "type count differs: " + std::to_string(expected.counts.size()) + " vs " +
           std::to_string(actual.counts.size());
  }
  for (const auto& [key, n] : expected.counts) {
    auto it = actual.counts.find(key);
    if (it == actual.counts.end()) return "missing type " + describe(key);
    if (it->second != n) {
      std::ostringstream os;
      os.precision(17);
      os << describe(key) << ": expected " << n << ", got " << it->second;
      return os.str();
    }
  }
  if (expected.premium != actual.premium) return "ledger differs";
  return {};
}

peerbargain::Market random_market(std::mt19937_64& rng, const RandomMarketOptions& options) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  // Loyalty and churn probabilities hit the closed ends now and then.
  auto probability = [&] {
    const double u = unit(rng);
    if (u < 0.1) return 0.0;
    if (u < 0.2) return 1.0;
    return unit(rng);
  };

  Market m;
  const std::size_t n_services = pick(options.min_services, options.max_services);
  const std::size_t n_isps = pick(options.min_isps, options.max_isps);
  const std::size_t n_csps = pick(options.min_csps, options.max_csps);

  double weight_sum = 0.0;
  for (std::size_t s = 0; s < n_services; ++s) {
    peerbargain::ServiceSpec spec;
    spec.id = "s" + std::to_string(s);
    spec.isp_churn_prob = probability();
    spec.csp_churn_prob = probability();
    spec.importance_weight = 0.05 + unit(rng);
    weight_sum += spec.importance_weight;
    m.services.push_back(spec);
  }
  for (auto& s : m.services) s.importance_weight /= weight_sum;

  for (std::size_t i = 0; i < n_isps; ++i) {
    peerbargain::AccessIsp isp;
    isp.id = "isp" + std::to_string(i);
    isp.subscribers = std::floor(10.0 + unit(rng) * 1e6);
    isp.loyalty = probability();
    isp.passive = i > 0 && unit(rng) < 0.2;
    m.isps.push_back(isp);
  }

  for (std::size_t x = 0; x < n_csps; ++x) {
    peerbargain::ContentProvider csp;
    csp.id = "csp" + std::to_string(x);
    csp.loyalty = probability();
    m.csps.push_back(csp);
  }
  // Every service gets at least one provider; shares leave a random
  // uncovered remainder about half the time.
  for (const auto& s : m.services) {
    std::vector<double> raw(n_csps, 0.0);
    double total = 0.0;
    for (std::size_t x = 0; x < n_csps; ++x) {
      if (unit(rng) < 0.7) raw[x] = 0.05 + unit(rng);
      total += raw[x];
    }
    if (total == 0.0) {
      raw[pick(0, n_csps - 1)] = 1.0;
      total = 1.0;
    }
    const double coverage = unit(rng) < 0.5 ? 1.0 : 0.3 + 0.6 * unit(rng);
    for (std::size_t x = 0; x < n_csps; ++x) {
      if (raw[x] > 0.0) m.csps[x].service_shares[s.id] = raw[x] / total * coverage;
    }
  }
  return m;
}

std::vector<peerbargain::PeeringEvent> random_events(const Market& market, std::mt19937_64& rng, std::size_t count) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < market.isps.size(); ++i)
    if (!market.isps[i].passive) active.push_back(i);
  std::vector<peerbargain::PeeringEvent> out;
  if (active.empty()) return out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    const auto i = active[std::uniform_int_distribution<std::size_t>(0, active.size() - 1)(rng)];
    const auto x = std::uniform_int_distribution<std::size_t>(0, market.csps.size() - 1)(rng);
    peerbargain::PeeringEvent e{market.isps[i].id, market.csps[x].id, {}, peerbargain::PeeringAction::establish};
    std::vector<std::string> offered;
    for (const auto& [service, share] : market.csps[x].service_shares)
      if (share > 0.0) offered.push_back(service);
    if (offered.empty()) continue;
    if (unit(rng) < 0.6) {
      for (const auto& s : offered)
        if (unit(rng) < 0.5) e.services.push_back(s);
      if (e.services.empty()) e.services.push_back(offered.front());
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace oracle
