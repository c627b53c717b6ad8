#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "peerbargain/peering_ledger.hpp"

namespace peerbargain {

/// Sentinel provider for users of a service not covered by any listed CSP.
inline constexpr std::string_view kNoProvider = "NONE";

/// Customer counts live on a dyadic grid of this resolution. Every count and
/// every churn delta is snapped to it, which keeps sums and differences exact.
inline constexpr double kCountResolution = 1.0 / 65536.0;

double snap_count(double value);

struct ServiceSpec {
  std::string id;
  double isp_churn_prob = 0.0;  // h(s)
  double csp_churn_prob = 0.0;  // g(s)
  double engagement_min_per_day = 0.0;
  double post_engagement_min_per_day = 0.0;
  double traffic_mb_per_min = 0.0;
  double post_traffic_mb_per_min = 0.0;
  double ad_rate_usd_per_min = 0.0;  // a(s) * rho(s)
  double post_ad_rate_usd_per_min = 0.0;
  double subscription_usd_per_month = 0.0;
  double post_subscription_usd_per_month = 0.0;
  double importance_weight = 0.0;  // share of customers whose preferred service is this one

  bool operator==(const ServiceSpec&) const = default;
};

struct AccessIsp {
  std::string id;
  double subscribers = 0.0;
  double profit_per_customer_usd_per_month = 0.0;
  double post_profit_per_customer_usd_per_month = 0.0;
  double loyalty = 1.0;  // beta(i)
  double transit_unit_cost = 0.0;  // USD per Gbps per month
  bool passive = false;  // loses customers to peering rivals but never peers itself

  bool operator==(const AccessIsp&) const = default;
};

/// Per-CSP replacement for the service-level revenue parameters, e.g. a
/// subscription price that differs between providers of the same service.
struct RevenueTerms {
  double subscription_usd_per_month = 0.0;
  double post_subscription_usd_per_month = 0.0;
  double ad_rate_usd_per_min = 0.0;
  double post_ad_rate_usd_per_min = 0.0;

  bool operator==(const RevenueTerms&) const = default;
};

struct ContentProvider {
  std::string id;
  double loyalty = 1.0;  // theta(x)
  std::map<std::string, double> service_shares;
  double transit_unit_cost = 0.0;
  std::map<std::string, RevenueTerms> revenue_overrides;

  double share(std::string_view service) const;
  bool operator==(const ContentProvider&) const = default;
};

/// The static side of a market: services, access ISPs and content providers.
struct Market {
  std::vector<ServiceSpec> services;
  std::vector<AccessIsp> isps;
  std::vector<ContentProvider> csps;

  std::optional<std::size_t> find_service(std::string_view id) const;
  std::optional<std::size_t> find_isp(std::string_view id) const;
  std::optional<std::size_t> find_csp(std::string_view id) const;

  // Throwing lookups (ModelError on unknown id).
  std::size_t service_index(std::string_view id) const;
  std::size_t isp_index(std::string_view id) const;
  std::size_t csp_index(std::string_view id) const;

  /// Revenue parameters CSP `csp` earns on service `service`.
  RevenueTerms revenue_terms(std::size_t csp, std::size_t service) const;

  bool operator==(const Market&) const = default;
};

/// A customer type (i, (s, T)) in readable form.
struct CustomerType {
  std::string isp;
  std::string preferred_service;
  std::vector<std::pair<std::string, std::string>> providers;  // service -> provider, service order

  bool operator==(const CustomerType&) const = default;
};

/// Enumeration of the customer types of one ISP. Types are ordered
/// lexicographically by (preferred service, provider vector) where services
/// follow dataset order and each service's providers follow CSP declaration
/// order with NONE last. A type is addressed by its local index.
class TypeSpace {
 public:
  struct Slot {
    std::optional<std::size_t> csp;  // nullopt = NONE
    double share = 0.0;
  };

  TypeSpace() = default;

  std::size_t service_count() const noexcept { return slots_.size(); }
  std::size_t provider_combinations() const noexcept { return combinations_; }
  std::size_t types_per_isp() const noexcept { return slots_.size() * combinations_; }

  std::span<const Slot> slots(std::size_t service) const { return slots_.at(service); }
  std::optional<std::size_t> slot_of(std::size_t service, std::size_t csp) const;
  bool slot_is_none(std::size_t service, std::size_t slot) const { return !slots_[service][slot].csp; }

  std::size_t preferred(std::size_t type) const noexcept { return type / combinations_; }
  std::size_t slot(std::size_t type, std::size_t service) const noexcept {
    return (type % combinations_) / strides_[service] % slots_[service].size();
  }
  std::size_t with_slot(std::size_t type, std::size_t service, std::size_t new_slot) const noexcept {
    return type - slot(type, service) * strides_[service] + new_slot * strides_[service];
  }
  std::size_t type_index(std::size_t preferred, std::span<const std::size_t> slot_vector) const;

  CustomerType describe(const Market& market, std::size_t isp, std::size_t type) const;

  bool operator==(const TypeSpace&) const;

 private:
  friend TypeSpace build_type_space(std::span<const ServiceSpec>, std::span<const ContentProvider>);

  std::vector<std::vector<Slot>> slots_;
  std::vector<std::size_t> strides_;
  std::size_t combinations_ = 0;
};

/// Remainder share at or below this is treated as zero (no NONE slot).
inline constexpr double kShareTolerance = 1e-9;

TypeSpace build_type_space(std::span<const ServiceSpec> services, std::span<const ContentProvider> providers);

/// Customer counts N(i,(s,T)) plus the peering ledger. Immutable in use:
/// operations return new states. The market and type space are shared.
class MarketState {
 public:
  MarketState(std::shared_ptr<const Market> market, std::shared_ptr<const TypeSpace> types,
              std::vector<double> counts, PeeringLedger ledger);

  const Market& market() const noexcept { return *market_; }
  const std::shared_ptr<const Market>& market_ptr() const noexcept { return market_; }
  const TypeSpace& types() const noexcept { return *types_; }
  const std::shared_ptr<const TypeSpace>& types_ptr() const noexcept { return types_; }
  const PeeringLedger& ledger() const noexcept { return ledger_; }

  std::span<const double> counts() const noexcept { return counts_; }
  std::span<const double> isp_counts(std::size_t isp) const;
  double count(std::size_t isp, std::size_t type) const { return counts_[isp * types_->types_per_isp() + type]; }

  double total() const;

 private:
  std::shared_ptr<const Market> market_;
  std::shared_ptr<const TypeSpace> types_;
  std::vector<double> counts_;
  PeeringLedger ledger_;
};

/// Uniform, uncorrelated initial distribution with an empty ledger.
MarketState initialize_market(std::shared_ptr<const Market> market);

/// n(i)_{xi=x}: customers of `isp` whose provider for `service` is `csp`.
double customers_of(const MarketState& state, std::string_view isp, std::string_view csp, std::string_view service);
double customers_of(const MarketState& state, std::size_t isp, std::size_t csp, std::size_t service);

/// As customers_of, restricted to customers whose preferred service is `service`.
double preferred_customers_of(const MarketState& state, std::size_t isp, std::size_t csp, std::size_t service);

/// Customers of `isp` whose preferred service is `service`.
double preferring_population(const MarketState& state, std::size_t isp, std::size_t service);

double isp_population(const MarketState& state, std::string_view isp);
double isp_population(const MarketState& state, std::size_t isp);

/// {"counts": [{"isp","preferred","providers":{...},"n"}], "ledger": [...]},
/// types in the stable order. Zero counts are included.
nlohmann::ordered_json state_to_json(const MarketState& state);
nlohmann::ordered_json ledger_to_json(const Market& market, const PeeringLedger& ledger);

}  // namespace peerbargain
