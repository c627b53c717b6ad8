#include "peerbargain/churn_engine.hpp"

#include <algorithm>

#include "peerbargain/error.hpp"

namespace peerbargain {

namespace {

bool contains(std::span<const std::size_t> values, std::size_t v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

void require_isp(const Market& market, std::size_t isp) {
  if (isp >= market.isps.size()) throw ModelError("isp index out of range");
}

void require_csp_services(const MarketState& state, std::size_t x, std::span<const std::size_t> services) {
  const Market& market = state.market();
  if (x >= market.csps.size()) throw ModelError("csp index out of range");
  for (std::size_t s : services) {
    if (s >= market.services.size()) throw ModelError("service index out of range");
    if (!state.types().slot_of(s, x))
      throw ModelError("csp '" + market.csps[x].id + "' does not offer service '" + market.services[s].id + "'");
  }
}

}  // namespace

double ChurnReport::phase1_total() const {
  double sum = 0.0;
  for (const auto& f : phase1) sum += f.amount;
  return sum;
}

double ChurnReport::phase2_total() const {
  double sum = 0.0;
  for (const auto& f : phase2) sum += f.amount;
  return sum;
}

std::vector<std::size_t> resolve_event_services(const Market& market, const PeeringEvent& event) {
  const std::size_t x = market.csp_index(event.csp);
  std::vector<std::size_t> out;
  if (event.services.empty()) {
    for (std::size_t s = 0; s < market.services.size(); ++s) {
      if (market.csps[x].share(market.services[s].id) > 0.0) out.push_back(s);
    }
    return out;
  }
  for (const auto& id : event.services) {
    const std::size_t s = market.service_index(id);
    if (!(market.csps[x].share(id) > 0.0))
      throw ModelError("csp '" + event.csp + "' does not offer service '" + id + "'");
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PhaseOutcome<IspChurnFlow> phase1_churn(const MarketState& state, std::size_t j, std::size_t x,
                                        std::span<const std::size_t> services) {
  const Market& market = state.market();
  const TypeSpace& types = state.types();
  require_isp(market, j);
  require_csp_services(state, x, services);

  const std::size_t per = types.types_per_isp();
  const std::size_t width = types.provider_combinations();
  std::vector<IspChurnFlow> flows;

  for (std::size_t i = 0; i < market.isps.size(); ++i) {
    if (i == j) continue;
    const double stay = 1.0 - market.isps[i].loyalty;
    for (std::size_t s : services) {
      if (state.ledger().has(i, x, s)) continue;
      const double rate = stay * market.services[s].isp_churn_prob;
      if (rate <= 0.0) continue;
      const std::size_t target_slot = *types.slot_of(s, x);
      for (std::size_t t = s * width; t < (s + 1) * width; ++t) {
        if (types.slot(t, s) != target_slot) continue;
        const double n = state.count(i, t);
        const double amount = snap_count(n * rate);
        if (amount > 0.0) flows.push_back({i, j, t, n, rate, amount});
      }
    }
  }

  std::vector<double> counts(state.counts().begin(), state.counts().end());
  for (const auto& f : flows) {
    counts[f.from_isp * per + f.type] -= f.amount;
    counts[f.to_isp * per + f.type] += f.amount;
  }
  return {MarketState(state.market_ptr(), state.types_ptr(), std::move(counts), state.ledger()), std::move(flows)};
}

PhaseOutcome<CspChurnFlow> phase2_churn(const MarketState& state, std::size_t i, std::size_t x,
                                        std::span<const std::size_t> services) {
  const Market& market = state.market();
  const TypeSpace& types = state.types();
  require_isp(market, i);
  require_csp_services(state, x, services);

  const std::size_t per = types.types_per_isp();
  const std::size_t width = types.provider_combinations();
  std::vector<CspChurnFlow> flows;

  for (std::size_t s : services) {
    const std::size_t target_slot = *types.slot_of(s, x);
    const auto slots = types.slots(s);
    for (std::size_t t = s * width; t < (s + 1) * width; ++t) {
      const std::size_t k = types.slot(t, s);
      if (k == target_slot || !slots[k].csp) continue;
      const std::size_t y = *slots[k].csp;
      if (state.ledger().has(i, y, s)) continue;
      const double rate = (1.0 - market.csps[y].loyalty) * market.services[s].csp_churn_prob;
      if (rate <= 0.0) continue;
      const double n = state.count(i, t);
      const double amount = snap_count(n * rate);
      if (amount > 0.0) flows.push_back({i, s, y, x, t, types.with_slot(t, s, target_slot), n, rate, amount});
    }
  }

  std::vector<double> counts(state.counts().begin(), state.counts().end());
  for (const auto& f : flows) {
    counts[i * per + f.from_type] -= f.amount;
    counts[i * per + f.to_type] += f.amount;
  }
  return {MarketState(state.market_ptr(), state.types_ptr(), std::move(counts), state.ledger()), std::move(flows)};
}

ChurnReport establish_peering(const MarketState& state, std::size_t isp, std::size_t csp,
                              std::span<const std::size_t> services) {
  const Market& market = state.market();
  require_isp(market, isp);
  require_csp_services(state, csp, services);
  if (market.isps[isp].passive)
    throw ModelError("isp '" + market.isps[isp].id + "' is passive and cannot establish peering");

  ChurnReport report;
  report.isp = isp;
  report.csp = csp;
  for (std::size_t s : services) {
    if (!state.ledger().has(isp, csp, s) && !contains(report.services, s)) report.services.push_back(s);
  }
  std::sort(report.services.begin(), report.services.end());

  auto pre = std::make_shared<const MarketState>(state);
  report.pre = pre;
  if (report.services.empty()) {
    report.post = pre;
    return report;
  }

  auto first = phase1_churn(state, isp, csp, report.services);
  auto second = phase2_churn(first.state, isp, csp, report.services);
  report.phase1 = std::move(first.flows);
  report.phase2 = std::move(second.flows);

  PeeringLedger ledger = state.ledger();
  for (std::size_t s : report.services) ledger.add(isp, csp, s);
  const MarketState& after = second.state;
  report.post = std::make_shared<const MarketState>(
      after.market_ptr(), after.types_ptr(), std::vector<double>(after.counts().begin(), after.counts().end()),
      std::move(ledger));
  return report;
}

ChurnReport establish_peering(const MarketState& state, const PeeringEvent& event) {
  if (event.action == PeeringAction::remove)
    throw ModelError("peering removal is not supported (" + event.isp + "/" + event.csp + ")");
  const Market& market = state.market();
  const std::size_t isp = market.isp_index(event.isp);
  const std::size_t csp = market.csp_index(event.csp);
  const auto services = resolve_event_services(market, event);
  return establish_peering(state, isp, csp, services);
}

SequenceOutcome simulate_sequence(const MarketState& state, std::span<const PeeringEvent> events) {
  SequenceOutcome out{state, {}};
  out.reports.reserve(events.size());
  for (const auto& event : events) {
    out.reports.push_back(establish_peering(out.state, event));
    out.state = *out.reports.back().post;
  }
  return out;
}

namespace {

nlohmann::ordered_json type_json(const MarketState& state, std::size_t isp, std::size_t type) {
  CustomerType ct = state.types().describe(state.market(), isp, type);
  nlohmann::ordered_json providers = nlohmann::ordered_json::object();
  for (auto& [service, provider] : ct.providers) providers[service] = provider;
  return {{"preferred", ct.preferred_service}, {"providers", std::move(providers)}};
}

}  // namespace

nlohmann::ordered_json report_to_json(const ChurnReport& report, bool include_flows) {
  const MarketState& pre = *report.pre;
  const Market& market = pre.market();
  nlohmann::ordered_json out;
  out["isp"] = market.isps.at(report.isp).id;
  out["csp"] = market.csps.at(report.csp).id;
  auto services = nlohmann::ordered_json::array();
  for (std::size_t s : report.services) services.push_back(market.services[s].id);
  out["services"] = std::move(services);
  out["phase1_flow_count"] = report.phase1.size();
  out["phase1_customers"] = report.phase1_total();
  out["phase2_flow_count"] = report.phase2.size();
  out["phase2_customers"] = report.phase2_total();
  if (!include_flows) return out;

  auto p1 = nlohmann::ordered_json::array();
  for (const auto& f : report.phase1) {
    nlohmann::ordered_json row;
    row["from_isp"] = market.isps[f.from_isp].id;
    row["to_isp"] = market.isps[f.to_isp].id;
    row["customer_type"] = type_json(pre, f.from_isp, f.type);
    row["source_count"] = f.source_count;
    row["rate"] = f.rate;
    row["amount"] = f.amount;
    p1.push_back(std::move(row));
  }
  auto p2 = nlohmann::ordered_json::array();
  for (const auto& f : report.phase2) {
    nlohmann::ordered_json row;
    row["isp"] = market.isps[f.isp].id;
    row["service"] = market.services[f.service].id;
    row["from_provider"] = market.csps[f.from_csp].id;
    row["to_provider"] = market.csps[f.to_csp].id;
    row["customer_type"] = type_json(pre, f.isp, f.from_type);
    row["source_count"] = f.source_count;
    row["rate"] = f.rate;
    row["amount"] = f.amount;
    p2.push_back(std::move(row));
  }
  out["phase1_flows"] = std::move(p1);
  out["phase2_flows"] = std::move(p2);
  return out;
}

}  // namespace peerbargain
