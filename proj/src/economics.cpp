#include "peerbargain/economics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "peerbargain/error.hpp"

namespace peerbargain {

namespace {

constexpr double kSecondsPerDay = 86400.0;
constexpr double kBitsPerMegabyte = 8e6;

/// n(i)_{xi=x} for every service, under both bases, from one pass over ISP i.
struct SliceCounts {
  std::vector<double> all;
  std::vector<double> preferred;

  const std::vector<double>& of(CountBasis basis) const {
    return basis == CountBasis::all_subscribers ? all : preferred;
  }
};

SliceCounts slice_counts(const MarketState& state, std::size_t i, std::size_t x) {
  const TypeSpace& types = state.types();
  const std::size_t services = types.service_count();
  std::vector<std::optional<std::size_t>> slot(services);
  for (std::size_t k = 0; k < services; ++k) slot[k] = types.slot_of(k, x);

  SliceCounts out{std::vector<double>(services, 0.0), std::vector<double>(services, 0.0)};
  auto counts = state.isp_counts(i);
  for (std::size_t t = 0; t < counts.size(); ++t) {
    const double n = counts[t];
    if (n == 0.0) continue;
    const std::size_t pref = types.preferred(t);
    for (std::size_t k = 0; k < services; ++k) {
      if (slot[k] && types.slot(t, k) == *slot[k]) {
        out.all[k] += n;
        if (k == pref) out.preferred[k] += n;
      }
    }
  }
  return out;
}

void require_pair(const Market& market, std::size_t i, std::size_t x) {
  if (i >= market.isps.size()) throw ModelError("isp index out of range");
  if (x >= market.csps.size()) throw ModelError("csp index out of range");
}

double engagement(const ServiceSpec& s, bool premium) {
  return premium ? s.post_engagement_min_per_day : s.engagement_min_per_day;
}

double traffic_rate(const ServiceSpec& s, bool premium) {
  return premium ? s.post_traffic_mb_per_min : s.traffic_mb_per_min;
}

TrafficBreakdown traffic_from(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation,
                              const SliceCounts& slice) {
  const Market& market = state.market();
  const auto& counts = slice.of(valuation.traffic_basis);
  TrafficBreakdown out;
  out.service_gbps.assign(market.services.size(), 0.0);
  for (std::size_t k = 0; k < market.services.size(); ++k) {
    const bool premium = state.ledger().has(i, x, k);
    const ServiceSpec& s = market.services[k];
    const double mb_per_day = traffic_rate(s, premium) * engagement(s, premium) * counts[k];
    const double gbps = mb_per_month_to_gbps(mb_per_day * valuation.costs.days_per_month, valuation.costs.days_per_month);
    out.service_gbps[k] = gbps;
    (premium ? out.peered_gbps : out.transit_gbps) += gbps;
  }
  return out;
}

/// Per-service profit contributions of one party on the (i, x) slice. The
/// fixed IXP fee is spread over premium services by peered traffic.
struct PartyValues {
  ProfitBreakdown total;
  std::vector<double> service_value;  // revenue minus delivery, per service
};

std::vector<double> delivery_by_service(const MarketState& state, std::size_t i, std::size_t x,
                                        const TrafficBreakdown& traffic, double transit_unit, const PeeringCost& peering,
                                        double cdn_unit) {
  const std::size_t services = traffic.service_gbps.size();
  std::vector<double> cost(services, 0.0);
  std::size_t premium_count = 0;
  for (std::size_t k = 0; k < services; ++k) premium_count += state.ledger().has(i, x, k) ? 1 : 0;
  for (std::size_t k = 0; k < services; ++k) {
    const double gbps = traffic.service_gbps[k];
    if (!state.ledger().has(i, x, k)) {
      cost[k] = transit_cost(gbps, transit_unit);
      continue;
    }
    const double weight = traffic.peered_gbps > 0.0 ? gbps / traffic.peered_gbps : 1.0 / double(premium_count);
    cost[k] = peering.ixp_usd_per_month * weight + cdn_unit * gbps;
  }
  return cost;
}

DeliveryCost delivery_total(const MarketState& state, std::size_t i, std::size_t x, const TrafficBreakdown& traffic,
                            double transit_unit, const CostModel& costs, bool bears_cdn) {
  DeliveryCost out;
  out.transit_usd_per_month = transit_cost(traffic.transit_gbps, transit_unit);
  if (state.ledger().has_any(i, x)) {
    const PeeringCost p = peering_cost(traffic.peered_gbps, costs, bears_cdn);
    out.ixp_usd_per_month = p.ixp_usd_per_month;
    out.cdn_usd_per_month = p.cdn_usd_per_month;
    out.ports = p.ports;
  }
  return out;
}

PartyValues csp_values(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation,
                       const SliceCounts& slice, const TrafficBreakdown& traffic) {
  const Market& market = state.market();
  const double days = valuation.costs.days_per_month;
  const auto& counts = slice.of(valuation.revenue_basis);
  PartyValues out;
  out.service_value.assign(market.services.size(), 0.0);
  for (std::size_t k = 0; k < market.services.size(); ++k) {
    if (!state.types().slot_of(k, x)) continue;
    const bool premium = state.ledger().has(i, x, k);
    const RevenueTerms terms = market.revenue_terms(x, k);
    const double subscription = premium ? terms.post_subscription_usd_per_month : terms.subscription_usd_per_month;
    const double ad_rate = premium ? terms.post_ad_rate_usd_per_min : terms.ad_rate_usd_per_min;
    const double revenue = (subscription + ad_rate * engagement(market.services[k], premium) * days) * counts[k];
    out.service_value[k] = revenue;
    out.total.revenue_usd_per_month += revenue;
  }
  const double unit = market.csps[x].transit_unit_cost;
  out.total.delivery = delivery_total(state, i, x, traffic, unit, valuation.costs, false);
  const auto cost =
      delivery_by_service(state, i, x, traffic, unit, peering_cost(traffic.peered_gbps, valuation.costs, false), 0.0);
  for (std::size_t k = 0; k < cost.size(); ++k) out.service_value[k] -= cost[k];
  return out;
}

double attribution_factor(const Market& market, const Valuation& valuation) {
  if (valuation.isp_profit_attribution == IspProfitAttribution::none) return 1.0;
  double sum = 0.0;
  for (std::size_t s : valuation.attribution_services) sum += market.services.at(s).importance_weight;
  return sum;
}

PartyValues isp_values(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation,
                       const TrafficBreakdown& traffic) {
  const Market& market = state.market();
  const AccessIsp& isp = market.isps[i];
  const bool premium = state.ledger().has_any(i, x);
  const double unit_profit =
      (premium ? isp.post_profit_per_customer_usd_per_month : isp.profit_per_customer_usd_per_month) *
      attribution_factor(market, valuation);

  PartyValues out;
  out.service_value.assign(market.services.size(), 0.0);
  for (std::size_t k = 0; k < market.services.size(); ++k) {
    const double revenue = unit_profit * preferring_population(state, i, k);
    out.service_value[k] = revenue;
    out.total.revenue_usd_per_month += revenue;
  }
  const double unit = isp.transit_unit_cost;
  out.total.delivery = delivery_total(state, i, x, traffic, unit, valuation.costs, true);
  const auto cost = delivery_by_service(state, i, x, traffic, unit, peering_cost(traffic.peered_gbps, valuation.costs, false),
                                        valuation.costs.cdn_unit_cost);
  for (std::size_t k = 0; k < cost.size(); ++k) out.service_value[k] -= cost[k];
  return out;
}

}  // namespace

double mb_per_month_to_gbps(double mb_per_month, double days_per_month) {
  return mb_per_month * kBitsPerMegabyte / (days_per_month * kSecondsPerDay) / 1e9;
}

double TrafficBreakdown::gbps_of(std::span<const std::size_t> services) const {
  double sum = 0.0;
  for (std::size_t s : services) sum += service_gbps.at(s);
  return sum;
}

TrafficBreakdown bilateral_traffic(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation) {
  require_pair(state.market(), i, x);
  return traffic_from(state, i, x, valuation, slice_counts(state, i, x));
}

double bilateral_traffic_gbps(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation) {
  return bilateral_traffic(state, i, x, valuation).total_gbps();
}

double transit_cost(double traffic_gbps, double unit_cost) { return traffic_gbps * unit_cost; }

PeeringCost peering_cost(double traffic_gbps, const CostModel& costs, bool with_cdn) {
  PeeringCost out;
  const double needed = std::ceil(traffic_gbps * costs.headroom_factor / costs.ixp_port_capacity);
  out.ports = std::max<std::size_t>(1, static_cast<std::size_t>(needed));
  out.ixp_usd_per_month = (costs.ixp_annual_membership + double(out.ports) * costs.ixp_port_annual_fee) / 12.0;
  if (with_cdn) out.cdn_usd_per_month = costs.cdn_unit_cost * traffic_gbps;
  return out;
}

ProfitBreakdown csp_profit(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation) {
  require_pair(state.market(), i, x);
  const SliceCounts slice = slice_counts(state, i, x);
  return csp_values(state, i, x, valuation, slice, traffic_from(state, i, x, valuation, slice)).total;
}

ProfitBreakdown isp_profit(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation) {
  require_pair(state.market(), i, x);
  const SliceCounts slice = slice_counts(state, i, x);
  return isp_values(state, i, x, valuation, traffic_from(state, i, x, valuation, slice)).total;
}

BargainOutcome nash_settlement(double v_isp, double v_isp_hat, double v_csp, double v_csp_hat) {
  if (!std::isfinite(v_isp) || !std::isfinite(v_isp_hat) || !std::isfinite(v_csp) || !std::isfinite(v_csp_hat))
    throw ModelError("settlement inputs must be finite");
  BargainOutcome out;
  out.v_isp_before = v_isp;
  out.v_isp_after = v_isp_hat;
  out.v_csp_before = v_csp;
  out.v_csp_after = v_csp_hat;
  const double gain_isp = v_isp_hat - v_isp;
  const double gain_csp = v_csp_hat - v_csp;
  out.surplus_u = gain_isp + gain_csp;
  out.deal = out.surplus_u >= 0.0;
  if (out.deal) {
    out.payment_csp_to_isp = 0.5 * (gain_csp - gain_isp);
    out.z_isp = v_isp + 0.5 * out.surplus_u;
    out.z_csp = v_csp + 0.5 * out.surplus_u;
  } else {
    out.z_isp = v_isp;
    out.z_csp = v_csp;
  }
  return out;
}

double bandwidth_price(double payment_usd_per_month, double pre_gbps, double post_gbps) {
  if (!(post_gbps > pre_gbps)) throw ModelError("bandwidth price undefined: peering adds no traffic");
  return payment_usd_per_month / (post_gbps - pre_gbps);
}

Settlement settle(const MarketState& before, const MarketState& after, std::size_t i, std::size_t x,
                  std::span<const std::size_t> event_services, const Valuation& valuation) {
  require_pair(before.market(), i, x);
  const SliceCounts slice_pre = slice_counts(before, i, x);
  const SliceCounts slice_post = slice_counts(after, i, x);
  const TrafficBreakdown traffic_pre = traffic_from(before, i, x, valuation, slice_pre);
  const TrafficBreakdown traffic_post = traffic_from(after, i, x, valuation, slice_post);

  const PartyValues isp_pre = isp_values(before, i, x, valuation, traffic_pre);
  const PartyValues isp_post = isp_values(after, i, x, valuation, traffic_post);
  const PartyValues csp_pre = csp_values(before, i, x, valuation, slice_pre, traffic_pre);
  const PartyValues csp_post = csp_values(after, i, x, valuation, slice_post, traffic_post);

  Settlement out;
  out.isp_before = isp_pre.total;
  out.isp_after = isp_post.total;
  out.csp_before = csp_pre.total;
  out.csp_after = csp_post.total;
  out.outcome = nash_settlement(isp_pre.total.profit_usd_per_month(), isp_post.total.profit_usd_per_month(),
                                csp_pre.total.profit_usd_per_month(), csp_post.total.profit_usd_per_month());
  out.pre_gbps = traffic_pre.gbps_of(event_services);
  out.post_gbps = traffic_post.gbps_of(event_services);
  if (out.post_gbps > out.pre_gbps)
    out.price_usd_per_gbps_month = bandwidth_price(out.outcome.payment_csp_to_isp, out.pre_gbps, out.post_gbps);

  const std::size_t services = before.market().services.size();
  for (std::size_t k = 0; k < services; ++k) {
    ServiceSettlement part;
    part.service = k;
    if (out.outcome.deal) {
      const double gain_csp = csp_post.service_value[k] - csp_pre.service_value[k];
      const double gain_isp = isp_post.service_value[k] - isp_pre.service_value[k];
      part.payment_usd_per_month = 0.5 * (gain_csp - gain_isp);
    }
    part.pre_gbps = traffic_pre.service_gbps[k];
    part.post_gbps = traffic_post.service_gbps[k];
    const bool is_event = std::find(event_services.begin(), event_services.end(), k) != event_services.end();
    if (is_event && part.post_gbps > part.pre_gbps)
      part.price_usd_per_gbps_month = bandwidth_price(part.payment_usd_per_month, part.pre_gbps, part.post_gbps);
    out.services.push_back(part);
  }
  return out;
}

nlohmann::ordered_json outcome_to_json(const BargainOutcome& o) {
  nlohmann::ordered_json out;
  out["v_isp_before_usd_per_month"] = o.v_isp_before;
  out["v_isp_after_usd_per_month"] = o.v_isp_after;
  out["v_csp_before_usd_per_month"] = o.v_csp_before;
  out["v_csp_after_usd_per_month"] = o.v_csp_after;
  out["surplus_usd_per_month"] = o.surplus_u;
  out["payment_usd_per_month"] = o.payment_csp_to_isp;
  out["z_isp_usd_per_month"] = o.z_isp;
  out["z_csp_usd_per_month"] = o.z_csp;
  out["deal"] = o.deal;
  return out;
}

nlohmann::ordered_json profit_to_json(const ProfitBreakdown& p) {
  nlohmann::ordered_json out;
  out["revenue_usd_per_month"] = p.revenue_usd_per_month;
  out["transit_usd_per_month"] = p.delivery.transit_usd_per_month;
  out["ixp_usd_per_month"] = p.delivery.ixp_usd_per_month;
  out["cdn_usd_per_month"] = p.delivery.cdn_usd_per_month;
  out["ports"] = p.delivery.ports;
  out["profit_usd_per_month"] = p.profit_usd_per_month();
  return out;
}

}  // namespace peerbargain
