#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "peerbargain/churn_engine.hpp"
#include "peerbargain/dataset.hpp"
#include "peerbargain/economics.hpp"

namespace peerbargain {

inline constexpr int kScenarioSchemaVersion = 1;
/// Upper bound on scenario evaluations one spec may request.
inline constexpr std::size_t kMaxScenarioCells = 10'000;

struct ScenarioOverrides {
  std::optional<double> beta;   // applied to every ISP
  std::optional<double> theta;  // applied to every CSP
  std::optional<std::string> uplift;
  bool cdn = false;
  std::optional<std::vector<std::string>> services;  // restricts every event to this subset
  CountBasis revenue_basis = CountBasis::preferred_service;
  CountBasis traffic_basis = CountBasis::all_subscribers;
  IspProfitAttribution isp_profit_attribution = IspProfitAttribution::none;
};

struct SweepAxis {
  std::string name;  // "beta" or "theta"
  std::vector<double> values;
};

struct Ordering {
  std::string name;
  std::vector<PeeringEvent> events;
};

struct ScenarioSpec {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  std::string description;
  std::variant<std::string, std::shared_ptr<const MarketDataset>> dataset = std::string(kBuiltinDatasetId);
  ScenarioOverrides overrides;
  std::vector<PeeringEvent> events;
  std::optional<std::pair<std::string, std::string>> focal;  // (isp, csp); defaults to the first event
  std::vector<SweepAxis> sweep;                               // declaration order
  std::vector<std::string> price_services;                   // empty = every service the focal CSP offers
  std::vector<Ordering> orderings;
  std::vector<std::string> compare_isps;
  bool include_flows = false;
};

/// Strict reader. Syntax errors and schema errors (unknown fields, wrong
/// types) raise ParseError; semantic checks happen when the spec is resolved.
ScenarioSpec scenario_from_json(const nlohmann::ordered_json& doc, const std::string& origin);
ScenarioSpec parse_scenario(std::string_view text, const std::string& origin);

using Cell = std::variant<std::monostate, double, std::string, bool>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  bool operator==(const ResultTable&) const = default;
};

struct ScenarioResult {
  std::string kind;  // run | sweep | price_table | timing | comparison
  std::string scenario;
  std::string dataset;
  nlohmann::ordered_json parameters;
  std::optional<nlohmann::ordered_json> run;  // settlement, events, populations
  std::optional<ResultTable> table;
  std::vector<std::string> notes;

  bool operator==(const ScenarioResult&) const = default;
};

/// A spec checked against its dataset, ready to evaluate.
class PreparedScenario {
 public:
  /// Throws ValidationError listing every semantic problem, ModelError for
  /// unknown dataset references.
  PreparedScenario(const ScenarioSpec& spec, const DatasetCatalog& catalog);

  const ScenarioSpec& spec() const noexcept { return spec_; }
  const MarketDataset& dataset() const noexcept { return *dataset_; }
  /// Market after uplift, loyalty and CDN overrides.
  const Market& market() const noexcept { return *market_; }
  const std::shared_ptr<const Market>& market_ptr() const noexcept { return market_; }
  const Valuation& valuation() const noexcept { return valuation_; }
  nlohmann::ordered_json parameters() const;

  struct Focal {
    std::size_t isp = 0;
    std::size_t csp = 0;
  };
  Focal focal() const noexcept { return focal_; }

 private:
  ScenarioSpec spec_;
  std::shared_ptr<const MarketDataset> dataset_;
  std::shared_ptr<const Market> market_;
  Valuation valuation_;
  Focal focal_;
};

/// Inputs of a single evaluation inside a scenario.
struct CellInputs {
  std::optional<double> beta;
  std::optional<double> theta;
  std::optional<std::size_t> isp;  // replaces the focal ISP
  std::vector<PeeringEvent> events;
};

struct RunOutcome {
  std::size_t focal_isp = 0;
  std::size_t focal_csp = 0;
  std::size_t focal_index = 0;  // position of the focal event in the sequence
  std::vector<std::size_t> focal_services;
  Settlement settlement;
  std::vector<ChurnReport> reports;
  MarketState final_state;
  ProfitBreakdown isp_final;  // focal ISP's profit on the pair after every event
};

RunOutcome evaluate(const PreparedScenario& prepared, const CellInputs& cell);

ScenarioResult run(const ScenarioSpec& spec, const DatasetCatalog& catalog);
ScenarioResult sweep(const ScenarioSpec& spec, const DatasetCatalog& catalog);
ScenarioResult price_table(const ScenarioSpec& spec, const DatasetCatalog& catalog);
ScenarioResult timing_experiment(const ScenarioSpec& spec, const DatasetCatalog& catalog);
ScenarioResult pair_comparison(const ScenarioSpec& spec, const DatasetCatalog& catalog);

/// Dispatches on "run", "sweep", "price-table", "timing" or "compare".
ScenarioResult run_command(std::string_view command, const ScenarioSpec& spec, const DatasetCatalog& catalog);

}  // namespace peerbargain
