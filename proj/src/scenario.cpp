#include "peerbargain/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "json_util.hpp"

namespace peerbargain {

using detail::child_path;
using detail::index_path;
using detail::ordered_json;

// --- reading ---------------------------------------------------------------

namespace {

CountBasis parse_basis(const detail::Reader& r, const ordered_json& j, const std::string& path) {
  const std::string v = r.string(j, path);
  if (v == "preferred_service") return CountBasis::preferred_service;
  if (v == "all_subscribers") return CountBasis::all_subscribers;
  r.fail(path, "expected \"preferred_service\" or \"all_subscribers\"");
}

std::string basis_name(CountBasis b) {
  return b == CountBasis::preferred_service ? "preferred_service" : "all_subscribers";
}

std::string attribution_name(IspProfitAttribution a) {
  return a == IspProfitAttribution::none ? "none" : "importance";
}

std::vector<std::string> string_list(const detail::Reader& r, const ordered_json& j, const std::string& path) {
  r.array(j, path);
  std::vector<std::string> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(r.string(j[k], index_path(path, k)));
  return out;
}

PeeringEvent read_event(const detail::Reader& r, const ordered_json& j, const std::string& path) {
  r.only_fields(j, path, {"isp", "csp", "services", "action"});
  PeeringEvent e;
  e.isp = r.string_field(j, path, "isp");
  e.csp = r.string_field(j, path, "csp");
  if (const auto* s = r.optional_field(j, "services")) e.services = string_list(r, *s, path + ".services");
  const std::string action = r.string_field(j, path, "action", "establish");
  if (action == "establish") {
    e.action = PeeringAction::establish;
  } else if (action == "remove") {
    e.action = PeeringAction::remove;
  } else {
    r.fail(path + ".action", "expected \"establish\" or \"remove\"");
  }
  return e;
}

std::vector<PeeringEvent> read_events(const detail::Reader& r, const ordered_json& j, const std::string& path) {
  r.array(j, path);
  std::vector<PeeringEvent> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(read_event(r, j[k], index_path(path, k)));
  return out;
}

}  // namespace

ScenarioSpec scenario_from_json(const ordered_json& doc, const std::string& origin) {
  const detail::Reader r(origin);
  r.only_fields(doc, "",
                {"schema_version", "name", "description", "dataset", "overrides", "events", "focal", "sweep",
                 "price_table", "timing", "compare", "output"});
  ScenarioSpec spec;
  spec.schema_version = static_cast<int>(r.count(r.field(doc, "", "schema_version"), "schema_version"));
  spec.name = r.string_field(doc, "", "name", "");
  spec.description = r.string_field(doc, "", "description", "");

  if (const auto* d = r.optional_field(doc, "dataset")) {
    if (d->is_string()) {
      spec.dataset = d->get<std::string>();
    } else if (d->is_object()) {
      try {
        spec.dataset = std::make_shared<const MarketDataset>(dataset_from_json(*d, origin));
      } catch (const ParseError& e) {
        throw ParseError(origin, "dataset." + e.field(), e.what());
      }
    } else {
      r.fail("dataset", "expected a dataset id or an inline dataset object");
    }
  }

  if (const auto* o = r.optional_field(doc, "overrides")) {
    const std::string p = "overrides";
    r.only_fields(*o, p,
                  {"beta", "theta", "uplift", "cdn", "services", "revenue_basis", "traffic_basis",
                   "isp_profit_attribution"});
    ScenarioOverrides& ov = spec.overrides;
    ov.beta = r.optional_number(*o, p, "beta");
    ov.theta = r.optional_number(*o, p, "theta");
    if (const auto* u = r.optional_field(*o, "uplift")) ov.uplift = r.string(*u, p + ".uplift");
    ov.cdn = r.bool_field(*o, p, "cdn", false);
    if (const auto* s = r.optional_field(*o, "services")) ov.services = string_list(r, *s, p + ".services");
    if (const auto* b = r.optional_field(*o, "revenue_basis")) ov.revenue_basis = parse_basis(r, *b, p + ".revenue_basis");
    if (const auto* b = r.optional_field(*o, "traffic_basis")) ov.traffic_basis = parse_basis(r, *b, p + ".traffic_basis");
    if (const auto* a = r.optional_field(*o, "isp_profit_attribution")) {
      const std::string v = r.string(*a, p + ".isp_profit_attribution");
      if (v == "none") {
        ov.isp_profit_attribution = IspProfitAttribution::none;
      } else if (v == "importance") {
        ov.isp_profit_attribution = IspProfitAttribution::importance;
      } else {
        r.fail(p + ".isp_profit_attribution", "expected \"none\" or \"importance\"");
      }
    }
  }

  spec.events = read_events(r, r.field(doc, "", "events"), "events");

  if (const auto* f = r.optional_field(doc, "focal")) {
    r.only_fields(*f, "focal", {"isp", "csp"});
    spec.focal = std::make_pair(r.string_field(*f, "focal", "isp"), r.string_field(*f, "focal", "csp"));
  }

  if (const auto* s = r.optional_field(doc, "sweep")) {
    r.only_fields(*s, "sweep", {"beta", "theta"});
    for (const auto& item : s->items()) {
      const std::string p = "sweep." + item.key();
      r.array(item.value(), p);
      SweepAxis axis{item.key(), {}};
      for (std::size_t k = 0; k < item.value().size(); ++k) axis.values.push_back(r.number(item.value()[k], index_path(p, k)));
      spec.sweep.push_back(std::move(axis));
    }
  }

  if (const auto* pt = r.optional_field(doc, "price_table")) {
    r.only_fields(*pt, "price_table", {"services"});
    if (const auto* s = r.optional_field(*pt, "services")) spec.price_services = string_list(r, *s, "price_table.services");
  }

  if (const auto* t = r.optional_field(doc, "timing")) {
    r.only_fields(*t, "timing", {"orderings"});
    const auto& list = r.array(r.field(*t, "timing", "orderings"), "timing.orderings");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = index_path("timing.orderings", k);
      r.only_fields(list[k], p, {"name", "events"});
      Ordering o;
      o.name = r.string_field(list[k], p, "name", "ordering " + std::to_string(k + 1));
      o.events = read_events(r, r.field(list[k], p, "events"), p + ".events");
      spec.orderings.push_back(std::move(o));
    }
  }

  if (const auto* c = r.optional_field(doc, "compare")) {
    r.only_fields(*c, "compare", {"isps"});
    spec.compare_isps = string_list(r, r.field(*c, "compare", "isps"), "compare.isps");
  }

  if (const auto* o = r.optional_field(doc, "output")) {
    r.only_fields(*o, "output", {"include_flows"});
    spec.include_flows = r.bool_field(*o, "output", "include_flows", false);
  }
  return spec;
}

ScenarioSpec parse_scenario(std::string_view text, const std::string& origin) {
  return scenario_from_json(detail::parse_json_text(text, origin), origin);
}

// --- preparation -----------------------------------------------------------

namespace {

using EventKey = std::tuple<std::string, std::string, std::vector<std::string>>;

EventKey event_key(const PeeringEvent& e) {
  std::vector<std::string> services = e.services;
  std::sort(services.begin(), services.end());
  return {e.isp, e.csp, services};
}

void check_event(const Market& market, const PeeringEvent& e, const std::string& path, std::vector<Violation>& v) {
  const auto isp = market.find_isp(e.isp);
  const auto csp = market.find_csp(e.csp);
  if (!isp) v.push_back({path + ".isp", "unknown isp '" + e.isp + "'"});
  if (!csp) v.push_back({path + ".csp", "unknown csp '" + e.csp + "'"});
  if (isp && market.isps[*isp].passive) v.push_back({path + ".isp", "isp '" + e.isp + "' is passive and never peers"});
  if (e.action == PeeringAction::remove) v.push_back({path + ".action", "peering removal is not supported"});
  for (std::size_t k = 0; k < e.services.size(); ++k) {
    const std::string sp = index_path(path + ".services", k);
    if (!market.find_service(e.services[k])) {
      v.push_back({sp, "unknown service '" + e.services[k] + "'"});
    } else if (csp && !(market.csps[*csp].share(e.services[k]) > 0.0)) {
      v.push_back({sp, "csp '" + e.csp + "' does not offer service '" + e.services[k] + "'"});
    }
  }
}

}  // namespace

PreparedScenario::PreparedScenario(const ScenarioSpec& spec, const DatasetCatalog& catalog) : spec_(spec) {
  std::vector<Violation> v;
  if (spec.schema_version != kScenarioSchemaVersion)
    throw ValidationError("schema_version", "unsupported schema version " + std::to_string(spec.schema_version));

  if (const auto* ref = std::get_if<std::string>(&spec.dataset)) {
    try {
      dataset_ = catalog.get(*ref);
    } catch (const ModelError& e) {
      throw ValidationError("dataset", e.what());
    }
  } else {
    const auto& inline_dataset = std::get<std::shared_ptr<const MarketDataset>>(spec.dataset);
    auto problems = validate(*inline_dataset);
    if (!problems.empty()) {
      for (auto& p : problems) p.path = "dataset." + p.path;
      throw ValidationError(std::move(problems));
    }
    auto copy = std::make_shared<MarketDataset>(*inline_dataset);
    refresh_derived_fields(*copy);
    dataset_ = std::move(copy);
  }
  const MarketDataset& d = *dataset_;

  const ScenarioOverrides& ov = spec.overrides;
  if (ov.beta && !(*ov.beta >= 0.0 && *ov.beta <= 1.0)) v.push_back({"overrides.beta", "loyalty must be within [0,1]"});
  if (ov.theta && !(*ov.theta >= 0.0 && *ov.theta <= 1.0))
    v.push_back({"overrides.theta", "loyalty must be within [0,1]"});
  const std::string uplift = ov.uplift.value_or(d.default_uplift);
  if (!d.uplift_scenarios.contains(uplift)) v.push_back({"overrides.uplift", "unknown uplift scenario '" + uplift + "'"});
  if (ov.services) {
    for (std::size_t k = 0; k < ov.services->size(); ++k) {
      if (!d.market.find_service((*ov.services)[k]))
        v.push_back({index_path("overrides.services", k), "unknown service '" + (*ov.services)[k] + "'"});
    }
  }

  if (spec.events.empty()) v.push_back({"events", "at least one event is required"});
  for (std::size_t k = 0; k < spec.events.size(); ++k) check_event(d.market, spec.events[k], index_path("events", k), v);

  std::pair<std::string, std::string> focal_ids;
  if (spec.focal) {
    focal_ids = *spec.focal;
    if (!d.market.find_isp(focal_ids.first)) v.push_back({"focal.isp", "unknown isp '" + focal_ids.first + "'"});
    if (!d.market.find_csp(focal_ids.second)) v.push_back({"focal.csp", "unknown csp '" + focal_ids.second + "'"});
  } else if (!spec.events.empty()) {
    focal_ids = {spec.events.front().isp, spec.events.front().csp};
  }
  const auto focal_event = std::find_if(spec.events.begin(), spec.events.end(), [&](const PeeringEvent& e) {
    return e.isp == focal_ids.first && e.csp == focal_ids.second;
  });
  if (!spec.events.empty() && focal_event == spec.events.end())
    v.push_back({"focal", "the focal pair does not appear in events"});

  for (std::size_t k = 0; k < spec.sweep.size(); ++k) {
    const SweepAxis& axis = spec.sweep[k];
    const std::string p = "sweep." + axis.name;
    if (axis.values.empty()) v.push_back({p, "grid must not be empty"});
    for (std::size_t j = 0; j < axis.values.size(); ++j) {
      if (!(axis.values[j] >= 0.0 && axis.values[j] <= 1.0)) v.push_back({index_path(p, j), "loyalty must be within [0,1]"});
    }
  }

  const auto focal_csp = d.market.find_csp(focal_ids.second);
  for (std::size_t k = 0; k < spec.price_services.size(); ++k) {
    const std::string& s = spec.price_services[k];
    const std::string p = index_path("price_table.services", k);
    if (!d.market.find_service(s)) {
      v.push_back({p, "unknown service '" + s + "'"});
    } else if (focal_csp && !(d.market.csps[*focal_csp].share(s) > 0.0)) {
      v.push_back({p, "csp '" + focal_ids.second + "' does not offer service '" + s + "'"});
    }
  }

  std::multiset<EventKey> base;
  for (const auto& e : spec.events) base.insert(event_key(e));
  for (std::size_t k = 0; k < spec.orderings.size(); ++k) {
    const std::string p = index_path("timing.orderings", k);
    std::multiset<EventKey> keys;
    for (std::size_t j = 0; j < spec.orderings[k].events.size(); ++j) {
      check_event(d.market, spec.orderings[k].events[j], index_path(p + ".events", j), v);
      keys.insert(event_key(spec.orderings[k].events[j]));
    }
    if (keys != base) v.push_back({p + ".events", "ordering is not a permutation of events"});
  }

  for (std::size_t k = 0; k < spec.compare_isps.size(); ++k) {
    const std::string& id = spec.compare_isps[k];
    const auto isp = d.market.find_isp(id);
    if (!isp) {
      v.push_back({index_path("compare.isps", k), "unknown isp '" + id + "'"});
    } else if (d.market.isps[*isp].passive) {
      v.push_back({index_path("compare.isps", k), "isp '" + id + "' is passive and never peers"});
    }
  }

  if (!v.empty()) throw ValidationError(std::move(v));

  // Restricting services must leave the focal event with something to peer.
  if (ov.services) {
    PeeringEvent restricted = *focal_event;
    const auto offered = resolve_event_services(d.market, restricted);
    const bool any = std::any_of(offered.begin(), offered.end(), [&](std::size_t s) {
      return std::find(ov.services->begin(), ov.services->end(), d.market.services[s].id) != ov.services->end();
    });
    if (!any) throw ValidationError("overrides.services", "leaves the focal event without services");
  }

  Market market = apply_uplift(d, uplift);
  if (ov.beta)
    for (auto& isp : market.isps) isp.loyalty = *ov.beta;
  if (ov.theta)
    for (auto& csp : market.csps) csp.loyalty = *ov.theta;
  market_ = std::make_shared<const Market>(std::move(market));

  valuation_.costs = d.cost_model;
  if (ov.cdn) valuation_.costs.cdn_unit_cost = d.cdn_offer_usd_per_gbps_month;
  valuation_.revenue_basis = ov.revenue_basis;
  valuation_.traffic_basis = ov.traffic_basis;
  valuation_.isp_profit_attribution = ov.isp_profit_attribution;

  focal_.isp = market_->isp_index(focal_ids.first);
  focal_.csp = market_->csp_index(focal_ids.second);
}

nlohmann::ordered_json PreparedScenario::parameters() const {
  const ScenarioOverrides& ov = spec_.overrides;
  ordered_json out;
  out["beta"] = ov.beta ? ordered_json(*ov.beta) : ordered_json(nullptr);
  out["theta"] = ov.theta ? ordered_json(*ov.theta) : ordered_json(nullptr);
  out["uplift"] = ov.uplift.value_or(dataset_->default_uplift);
  out["cdn"] = ov.cdn;
  out["cdn_unit_cost"] = valuation_.costs.cdn_unit_cost;
  out["services"] = ov.services ? ordered_json(*ov.services) : ordered_json(nullptr);
  out["revenue_basis"] = basis_name(ov.revenue_basis);
  out["traffic_basis"] = basis_name(ov.traffic_basis);
  out["isp_profit_attribution"] = attribution_name(ov.isp_profit_attribution);
  out["focal"] = {{"isp", market_->isps[focal_.isp].id}, {"csp", market_->csps[focal_.csp].id}};
  return out;
}

// --- evaluation ------------------------------------------------------------

namespace {

/// Services an event adds once the scenario-wide service subset is applied.
std::vector<std::size_t> restricted_services(const Market& market, const PeeringEvent& event,
                                             const std::optional<std::vector<std::string>>& subset) {
  auto services = resolve_event_services(market, event);
  if (!subset) return services;
  std::erase_if(services, [&](std::size_t s) {
    return std::find(subset->begin(), subset->end(), market.services[s].id) == subset->end();
  });
  return services;
}

}  // namespace

RunOutcome evaluate(const PreparedScenario& prepared, const CellInputs& cell) {
  std::shared_ptr<const Market> market = prepared.market_ptr();
  if (cell.beta || cell.theta) {
    Market copy = prepared.market();
    if (cell.beta)
      for (auto& isp : copy.isps) isp.loyalty = *cell.beta;
    if (cell.theta)
      for (auto& csp : copy.csps) csp.loyalty = *cell.theta;
    market = std::make_shared<const Market>(std::move(copy));
  }

  const auto focal = prepared.focal();
  const std::size_t focal_isp = cell.isp.value_or(focal.isp);
  const std::string& base_isp = market->isps[focal.isp].id;
  const std::string& csp_id = market->csps[focal.csp].id;

  RunOutcome out{focal_isp, focal.csp, 0, {}, {}, {}, initialize_market(market), {}};
  Valuation valuation = prepared.valuation();
  bool focal_done = false;
  const auto& subset = prepared.spec().overrides.services;

  for (std::size_t k = 0; k < cell.events.size(); ++k) {
    PeeringEvent event = cell.events[k];
    const bool is_focal = !focal_done && event.isp == base_isp && event.csp == csp_id;
    if (is_focal) event.isp = market->isps[focal_isp].id;
    const auto services = restricted_services(*market, event, subset);
    ChurnReport report =
        establish_peering(out.final_state, market->isp_index(event.isp), market->csp_index(event.csp), services);
    if (is_focal) {
      focal_done = true;
      out.focal_index = k;
      out.focal_services = report.services;
      valuation.attribution_services = report.services;
      out.settlement = settle(*report.pre, *report.post, focal_isp, focal.csp, report.services, valuation);
    }
    out.final_state = *report.post;
    out.reports.push_back(std::move(report));
  }
  if (!focal_done) throw ModelError("focal pair does not appear in the event sequence");
  out.isp_final = isp_profit(out.final_state, focal_isp, focal.csp, valuation);
  return out;
}

namespace {

template <typename R, typename F>
std::vector<R> parallel_map(std::size_t count, F&& fn) {
  std::vector<std::optional<R>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        slots[k].emplace(fn(k));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Cartesian product of the sweep axes, first axis outermost.
std::vector<std::vector<double>> grid_points(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& p : points) {
      for (double v : axis.values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

void apply_point(CellInputs& cell, const std::vector<SweepAxis>& axes, const std::vector<double>& point) {
  for (std::size_t k = 0; k < axes.size(); ++k) (axes[k].name == "beta" ? cell.beta : cell.theta) = point[k];
}

void check_cells(std::size_t cells) {
  if (cells > kMaxScenarioCells)
    throw ValidationError("sweep", fmt::format("{} evaluations requested, the limit is {}", cells, kMaxScenarioCells));
}

std::string describe_point(const std::vector<SweepAxis>& axes, const std::vector<double>& point) {
  std::string out;
  for (std::size_t k = 0; k < axes.size(); ++k) out += fmt::format("{}{}={}", k ? ", " : "", axes[k].name, point[k]);
  return out;
}

Cell optional_cell(const std::optional<double>& v) { return v ? Cell(*v) : Cell(std::monostate{}); }

ScenarioResult header(const PreparedScenario& p, std::string kind) {
  ScenarioResult r;
  r.kind = std::move(kind);
  r.scenario = p.spec().name;
  r.dataset = p.dataset().id;
  r.parameters = p.parameters();
  return r;
}

ordered_json settlement_json(const Market& market, const Settlement& s, std::size_t csp) {
  ordered_json out = outcome_to_json(s.outcome);
  out["isp_before"] = profit_to_json(s.isp_before);
  out["isp_after"] = profit_to_json(s.isp_after);
  out["csp_before"] = profit_to_json(s.csp_before);
  out["csp_after"] = profit_to_json(s.csp_after);
  out["traffic_gbps_before"] = s.pre_gbps;
  out["traffic_gbps_after"] = s.post_gbps;
  out["price_usd_per_gbps_month"] = s.price_usd_per_gbps_month ? ordered_json(*s.price_usd_per_gbps_month) : ordered_json(nullptr);
  auto services = ordered_json::array();
  for (const auto& part : s.services) {
    if (!(market.csps[csp].share(market.services[part.service].id) > 0.0)) continue;
    ordered_json row;
    row["service"] = market.services[part.service].id;
    row["payment_usd_per_month"] = part.payment_usd_per_month;
    row["traffic_gbps_before"] = part.pre_gbps;
    row["traffic_gbps_after"] = part.post_gbps;
    row["price_usd_per_gbps_month"] =
        part.price_usd_per_gbps_month ? ordered_json(*part.price_usd_per_gbps_month) : ordered_json(nullptr);
    services.push_back(std::move(row));
  }
  out["services"] = std::move(services);
  return out;
}

const std::vector<std::string> kOutcomeColumns = {
    "payment_usd_per_month",      "deal",                       "surplus_usd_per_month",
    "v_isp_before_usd_per_month", "v_isp_after_usd_per_month",  "v_csp_before_usd_per_month",
    "v_csp_after_usd_per_month",  "price_usd_per_gbps_month"};

void push_outcome(std::vector<Cell>& row, const Settlement& s) {
  row.emplace_back(s.outcome.payment_csp_to_isp);
  row.emplace_back(s.outcome.deal);
  row.emplace_back(s.outcome.surplus_u);
  row.emplace_back(s.outcome.v_isp_before);
  row.emplace_back(s.outcome.v_isp_after);
  row.emplace_back(s.outcome.v_csp_before);
  row.emplace_back(s.outcome.v_csp_after);
  row.push_back(optional_cell(s.price_usd_per_gbps_month));
}

std::vector<std::string> axis_columns(const std::vector<SweepAxis>& axes) {
  std::vector<std::string> out;
  for (const auto& a : axes) out.push_back(a.name);
  return out;
}

}  // namespace

ScenarioResult run(const ScenarioSpec& spec, const DatasetCatalog& catalog) {
  const PreparedScenario p(spec, catalog);
  CellInputs cell;
  cell.events = spec.events;
  const RunOutcome o = evaluate(p, cell);
  const Market& market = p.market();

  ScenarioResult r = header(p, "run");
  ordered_json body;
  auto services = ordered_json::array();
  for (std::size_t s : o.focal_services) services.push_back(market.services[s].id);
  body["focal"] = {{"isp", market.isps[o.focal_isp].id},
                   {"csp", market.csps[o.focal_csp].id},
                   {"event_index", o.focal_index},
                   {"services", std::move(services)}};
  body["settlement"] = settlement_json(market, o.settlement, o.focal_csp);
  body["focal_isp_profit_final_usd_per_month"] = o.isp_final.profit_usd_per_month();
  auto events = ordered_json::array();
  for (const auto& report : o.reports) events.push_back(report_to_json(report, spec.include_flows));
  body["events"] = std::move(events);
  const MarketState initial = *o.reports.front().pre;
  auto populations = ordered_json::array();
  for (std::size_t i = 0; i < market.isps.size(); ++i) {
    populations.push_back({{"isp", market.isps[i].id},
                           {"initial", isp_population(initial, i)},
                           {"final", isp_population(o.final_state, i)}});
  }
  body["populations"] = std::move(populations);
  r.run = std::move(body);
  if (!o.settlement.outcome.deal) r.notes.push_back("no deal: the joint surplus is negative");
  return r;
}

ScenarioResult sweep(const ScenarioSpec& spec, const DatasetCatalog& catalog) {
  const PreparedScenario p(spec, catalog);
  if (spec.sweep.empty()) throw ValidationError("sweep", "at least one sweep axis is required");
  const auto points = grid_points(spec.sweep);
  check_cells(points.size());

  const auto outcomes = parallel_map<Settlement>(points.size(), [&](std::size_t k) {
    CellInputs cell;
    cell.events = spec.events;
    apply_point(cell, spec.sweep, points[k]);
    return evaluate(p, cell).settlement;
  });

  ScenarioResult r = header(p, "sweep");
  ResultTable table;
  table.columns = axis_columns(spec.sweep);
  table.columns.insert(table.columns.end(), kOutcomeColumns.begin(), kOutcomeColumns.end());
  for (std::size_t k = 0; k < points.size(); ++k) {
    std::vector<Cell> row(points[k].begin(), points[k].end());
    push_outcome(row, outcomes[k]);
    table.rows.push_back(std::move(row));
    if (!outcomes[k].outcome.deal) r.notes.push_back("no deal at " + describe_point(spec.sweep, points[k]));
  }
  r.table = std::move(table);
  return r;
}

ScenarioResult price_table(const ScenarioSpec& spec, const DatasetCatalog& catalog) {
  const PreparedScenario p(spec, catalog);
  const Market& market = p.market();
  const auto focal = p.focal();

  std::vector<std::string> services = spec.price_services;
  if (services.empty()) {
    for (const auto& s : market.services)
      if (market.csps[focal.csp].share(s.id) > 0.0) services.push_back(s.id);
  }
  // Columns follow dataset order whatever order the spec lists them in.
  std::sort(services.begin(), services.end(),
            [&](const std::string& a, const std::string& b) { return market.service_index(a) < market.service_index(b); });
  services.erase(std::unique(services.begin(), services.end()), services.end());

  std::vector<SweepAxis> axes = spec.sweep;
  if (axes.empty()) axes.push_back({"theta", {spec.overrides.theta.value_or(market.csps[focal.csp].loyalty)}});
  const auto points = grid_points(axes);
  check_cells(points.size() * services.size());

  const std::string& focal_isp = market.isps[focal.isp].id;
  const std::string& focal_csp = market.csps[focal.csp].id;
  const auto prices = parallel_map<std::optional<double>>(points.size() * services.size(), [&](std::size_t k) {
    CellInputs cell;
    cell.events = spec.events;
    for (auto& e : cell.events) {
      if (e.isp == focal_isp && e.csp == focal_csp) {
        e.services = {services[k % services.size()]};
        break;
      }
    }
    apply_point(cell, axes, points[k / services.size()]);
    return evaluate(p, cell).settlement.price_usd_per_gbps_month;
  });

  ScenarioResult r = header(p, "price_table");
  ResultTable table;
  table.columns = axis_columns(axes);
  table.columns.insert(table.columns.end(), services.begin(), services.end());
  for (std::size_t k = 0; k < points.size(); ++k) {
    std::vector<Cell> row(points[k].begin(), points[k].end());
    for (std::size_t j = 0; j < services.size(); ++j) {
      const auto& price = prices[k * services.size() + j];
      row.push_back(optional_cell(price));
      if (!price)
        r.notes.push_back("price undefined for " + services[j] + " at " + describe_point(axes, points[k]) +
                          ": the peering adds no traffic");
    }
    table.rows.push_back(std::move(row));
  }
  r.table = std::move(table);
  r.notes.insert(r.notes.begin(), "prices in USD per Gbps per month; each service peers on its own");
  return r;
}

ScenarioResult timing_experiment(const ScenarioSpec& spec, const DatasetCatalog& catalog) {
  const PreparedScenario p(spec, catalog);
  if (spec.orderings.empty()) throw ValidationError("timing.orderings", "at least one ordering is required");
  const auto points = grid_points(spec.sweep);
  const std::size_t per = points.size();
  check_cells(spec.orderings.size() * per);

  const auto outcomes = parallel_map<RunOutcome>(spec.orderings.size() * per, [&](std::size_t k) {
    CellInputs cell;
    cell.events = spec.orderings[k / per].events;
    apply_point(cell, spec.sweep, points[k % per]);
    return evaluate(p, cell);
  });

  ScenarioResult r = header(p, "timing");
  ResultTable table;
  table.columns = {"ordering"};
  for (const auto& c : axis_columns(spec.sweep)) table.columns.push_back(c);
  for (const char* c : {"focal_position", "focal_isp_population_after", "focal_isp_profit_before_usd_per_month",
                        "focal_isp_profit_after_usd_per_month", "focal_isp_profit_final_usd_per_month",
                        "payment_usd_per_month", "deal", "surplus_usd_per_month"})
    table.columns.emplace_back(c);
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const RunOutcome& o = outcomes[k];
    std::vector<Cell> row{Cell(spec.orderings[k / per].name)};
    for (double v : points[k % per]) row.emplace_back(v);
    row.emplace_back(double(o.focal_index + 1));
    row.emplace_back(isp_population(*o.reports[o.focal_index].post, o.focal_isp));
    row.emplace_back(o.settlement.outcome.v_isp_before);
    row.emplace_back(o.settlement.outcome.v_isp_after);
    row.emplace_back(o.isp_final.profit_usd_per_month());
    row.emplace_back(o.settlement.outcome.payment_csp_to_isp);
    row.emplace_back(o.settlement.outcome.deal);
    row.emplace_back(o.settlement.outcome.surplus_u);
    table.rows.push_back(std::move(row));
  }
  r.table = std::move(table);
  return r;
}

ScenarioResult pair_comparison(const ScenarioSpec& spec, const DatasetCatalog& catalog) {
  const PreparedScenario p(spec, catalog);
  if (spec.compare_isps.empty()) throw ValidationError("compare.isps", "at least one isp is required");
  const auto points = grid_points(spec.sweep);
  const std::size_t per = points.size();
  check_cells(spec.compare_isps.size() * per);

  const auto outcomes = parallel_map<Settlement>(spec.compare_isps.size() * per, [&](std::size_t k) {
    CellInputs cell;
    cell.events = spec.events;
    cell.isp = p.market().isp_index(spec.compare_isps[k / per]);
    apply_point(cell, spec.sweep, points[k % per]);
    return evaluate(p, cell).settlement;
  });

  ScenarioResult r = header(p, "comparison");
  ResultTable table;
  table.columns = {"isp"};
  for (const auto& c : axis_columns(spec.sweep)) table.columns.push_back(c);
  table.columns.insert(table.columns.end(), kOutcomeColumns.begin(), kOutcomeColumns.end());
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    std::vector<Cell> row{Cell(spec.compare_isps[k / per])};
    for (double v : points[k % per]) row.emplace_back(v);
    push_outcome(row, outcomes[k]);
    table.rows.push_back(std::move(row));
  }
  r.table = std::move(table);
  return r;
}

ScenarioResult run_command(std::string_view command, const ScenarioSpec& spec, const DatasetCatalog& catalog) {
  if (command == "run") return run(spec, catalog);
  if (command == "sweep") return sweep(spec, catalog);
  if (command == "price-table") return price_table(spec, catalog);
  if (command == "timing") return timing_experiment(spec, catalog);
  if (command == "compare") return pair_comparison(spec, catalog);
  throw ModelError("unknown command '" + std::string(command) + "'");
}

}  // namespace peerbargain
