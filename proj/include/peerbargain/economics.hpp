#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "peerbargain/market_model.hpp"

namespace peerbargain {

struct CostModel {
  double transit_unit_cost_default = 1000.0;  // USD per Gbps per month
  double ixp_annual_membership = 2700.0;      // USD per year, per party
  double ixp_port_annual_fee = 14000.0;       // USD per year, per port
  double ixp_port_capacity = 10.0;            // Gbps
  double headroom_factor = 1.0;
  double cdn_unit_cost = 0.0;  // USD per Gbps per month, borne by the ISP; 0 = no CDN
  double days_per_month = 30.0;

  bool operator==(const CostModel&) const = default;
};

/// Which customers of ISP i a per-service quantity is accrued over.
///  all_subscribers:   everyone whose provider for the service is x
///  preferred_service: the subset of those whose preferred service it is
enum class CountBasis { all_subscribers, preferred_service };

enum class IspProfitAttribution { none, importance };

/// Settings shared by every profit computation of one evaluation.
struct Valuation {
  CostModel costs;
  CountBasis revenue_basis = CountBasis::preferred_service;
  CountBasis traffic_basis = CountBasis::all_subscribers;
  IspProfitAttribution isp_profit_attribution = IspProfitAttribution::none;
  /// Services whose importance weights scale u(i) under importance attribution.
  std::vector<std::size_t> attribution_services;
};

/// Average Gbps for `mb_per_month` megabytes spread over a month of `days`.
double mb_per_month_to_gbps(double mb_per_month, double days_per_month);

/// Bilateral traffic between ISP i and CSP x, per service and in total.
/// Services premium on the pair (per the ledger) use the post-peering
/// engagement and traffic rates.
struct TrafficBreakdown {
  std::vector<double> service_gbps;  // indexed by service
  double transit_gbps = 0.0;         // services at best-effort quality
  double peered_gbps = 0.0;          // services at premium quality
  double total_gbps() const { return transit_gbps + peered_gbps; }
  double gbps_of(std::span<const std::size_t> services) const;
};

TrafficBreakdown bilateral_traffic(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation);
double bilateral_traffic_gbps(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation);

double transit_cost(double traffic_gbps, double unit_cost);

struct PeeringCost {
  std::size_t ports = 0;
  double ixp_usd_per_month = 0.0;
  double cdn_usd_per_month = 0.0;
  double total_usd_per_month() const { return ixp_usd_per_month + cdn_usd_per_month; }
};

/// IXP membership plus ports, and the CDN surcharge when `with_cdn`.
PeeringCost peering_cost(double traffic_gbps, const CostModel& costs, bool with_cdn = true);

struct DeliveryCost {
  double transit_usd_per_month = 0.0;
  double ixp_usd_per_month = 0.0;
  double cdn_usd_per_month = 0.0;
  std::size_t ports = 0;
  double total_usd_per_month() const { return transit_usd_per_month + ixp_usd_per_month + cdn_usd_per_month; }
};

struct ProfitBreakdown {
  double revenue_usd_per_month = 0.0;
  DeliveryCost delivery;
  double profit_usd_per_month() const { return revenue_usd_per_month - delivery.total_usd_per_month(); }
};

/// V_x for the bilateral slice (i, x) of `state`.
ProfitBreakdown csp_profit(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation);
/// V_i for the bilateral slice (i, x) of `state`.
ProfitBreakdown isp_profit(const MarketState& state, std::size_t i, std::size_t x, const Valuation& valuation);

struct BargainOutcome {
  double v_isp_before = 0.0;
  double v_isp_after = 0.0;
  double v_csp_before = 0.0;
  double v_csp_after = 0.0;
  double surplus_u = 0.0;
  double payment_csp_to_isp = 0.0;  // w_x; negative means the ISP pays the CSP
  double z_isp = 0.0;
  double z_csp = 0.0;
  bool deal = false;

  double payment_isp_to_csp() const { return -payment_csp_to_isp; }
};

/// Nash bargaining split of the joint gain. Throws ModelError on non-finite input.
BargainOutcome nash_settlement(double v_isp, double v_isp_hat, double v_csp, double v_csp_hat);

/// USD per Gbps per month. Throws ModelError unless post_gbps > pre_gbps.
double bandwidth_price(double payment_usd_per_month, double pre_gbps, double post_gbps);

/// One service's share of the payment, with its traffic change and price.
struct ServiceSettlement {
  std::size_t service = 0;
  double payment_usd_per_month = 0.0;
  double pre_gbps = 0.0;
  double post_gbps = 0.0;
  std::optional<double> price_usd_per_gbps_month;
};

struct Settlement {
  ProfitBreakdown isp_before, isp_after, csp_before, csp_after;
  BargainOutcome outcome;
  double pre_gbps = 0.0;   // event services only
  double post_gbps = 0.0;  // event services only
  std::optional<double> price_usd_per_gbps_month;
  std::vector<ServiceSettlement> services;  // event services, dataset order
};

/// Settles peering (i, x) for `event_services`, valuing `before` as the
/// status quo and `after` as the state with the peering in place. Per-service
/// payments add up to the total; fixed IXP fees are split by peered traffic.
Settlement settle(const MarketState& before, const MarketState& after, std::size_t i, std::size_t x,
                  std::span<const std::size_t> event_services, const Valuation& valuation);

nlohmann::ordered_json outcome_to_json(const BargainOutcome& outcome);
nlohmann::ordered_json profit_to_json(const ProfitBreakdown& profit);

}  // namespace peerbargain
