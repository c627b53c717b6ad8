#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "peerbargain/economics.hpp"
#include "peerbargain/error.hpp"
#include "peerbargain/market_model.hpp"

namespace peerbargain {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr std::string_view kBuiltinDatasetId = "us2013";

struct ChurnOverride {
  std::optional<double> h;
  std::optional<double> g;

  bool operator==(const ChurnOverride&) const = default;
};

/// Linear h/g schedules. For an order [s_0 .. s_{n-1}], the last service gets
/// the base value and each step towards the front subtracts one increment:
/// value(s_k) = base - (n - 1 - k) * step. Overrides are applied last.
struct ChurnSchedule {
  double h_base = 0.0;
  double mu = 0.0;
  std::vector<std::string> h_order;
  double g_base = 0.0;
  double nu = 0.0;
  std::vector<std::string> g_order;
  std::map<std::string, ChurnOverride> overrides;

  bool operator==(const ChurnSchedule&) const = default;
};

struct ChurnValues {
  double h = 0.0;
  double g = 0.0;

  bool operator==(const ChurnValues&) const = default;
};

/// Service id -> (h, g). Throws ValidationError for out-of-range values,
/// unknown service ids, or services left without a value.
std::map<std::string, ChurnValues> churn_schedule_values(const ChurnSchedule& schedule,
                                                         const std::vector<std::string>& services);

/// Multipliers applied to a service's engagement time and traffic rate once
/// it is delivered over premium peering.
struct UpliftFactors {
  double engagement_factor = 1.0;
  double traffic_factor = 1.0;

  bool operator==(const UpliftFactors&) const = default;
};

using UpliftScenario = std::map<std::string, UpliftFactors>;  // service id -> factors; absent = 1

struct LoyaltyBounds {
  double beta_low = 0.0;
  double beta_high = 1.0;
  double theta_low = 0.0;
  double theta_high = 1.0;

  bool operator==(const LoyaltyBounds&) const = default;
};

/// A complete market parameterization. `market` holds the pre-peering values
/// with churn probabilities taken from the schedule and post-peering
/// engagement and traffic taken from `default_uplift`.
struct MarketDataset {
  int schema_version = kDatasetSchemaVersion;
  std::string id;
  std::string description;
  Market market;
  ChurnSchedule churn_schedule;
  std::map<std::string, UpliftScenario> uplift_scenarios;
  std::string default_uplift;
  CostModel cost_model;
  double cdn_offer_usd_per_gbps_month = 0.0;  // used when a scenario enables CDN delivery
  LoyaltyBounds loyalty_bounds;
  std::map<std::string, std::string> provenance;  // value group -> source note

  bool operator==(const MarketDataset&) const = default;
};

/// Sets post-peering engagement and traffic from the named uplift scenario.
/// Throws ModelError for an unknown scenario name.
Market apply_uplift(const MarketDataset& dataset, std::string_view scenario);

/// Recomputes h/g from the schedule and post values from the default uplift.
void refresh_derived_fields(MarketDataset& dataset);

double derive_isp_unit_profit(double price_usd, double provisioning_cost_fraction);

struct AdRateInputs {
  std::map<std::string, double> csp_quarterly_profit_usd;
  std::map<std::string, double> ad_format_split;          // service -> fraction of ad spending
  std::map<std::string, double> engagement_min_per_day;   // service -> minutes per user per day
  double population = 0.0;                               // subscribers the profit is spread over
  double days_per_month = 30.0;
};

/// Profit per engagement minute per service: quarterly profits to monthly,
/// split by the normalized format shares, divided by engagement minutes of
/// the whole population. Throws ModelError on zero denominators.
std::map<std::string, double> derive_ad_rates(const AdRateInputs& inputs);

/// Published inputs behind the built-in ad rates.
AdRateInputs us2013_ad_rate_inputs();

MarketDataset builtin_us_dataset();

/// Every broken invariant, with field paths. Empty means valid.
std::vector<Violation> validate(const MarketDataset& dataset);

nlohmann::ordered_json dataset_to_json(const MarketDataset& dataset);
/// Strict reader: unknown fields and wrong types raise ParseError. The result
/// is not validated.
MarketDataset dataset_from_json(const nlohmann::ordered_json& doc, const std::string& origin);
/// Parses and validates. Throws ParseError or ValidationError.
MarketDataset parse_dataset(std::string_view text, const std::string& origin);
MarketDataset load_dataset(const std::filesystem::path& path);

/// Resolves dataset references: the built-in id, `<id>.json` files in the
/// search directory, and (when allowed) file paths.
class DatasetCatalog {
 public:
  explicit DatasetCatalog(std::optional<std::filesystem::path> search_dir = std::nullopt, bool allow_paths = true);

  /// PEERBARGAIN_DATASET_DIR, if set.
  static std::optional<std::filesystem::path> environment_search_dir();

  std::vector<std::string> list() const;
  /// Throws ModelError (unknown id) or ParseError/ValidationError (bad file).
  std::shared_ptr<const MarketDataset> get(const std::string& ref) const;
  bool contains(const std::string& id) const;

 private:
  std::optional<std::filesystem::path> search_dir_;
  bool allow_paths_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const MarketDataset>> cache_;
};

}  // namespace peerbargain
