#include "peerbargain/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace peerbargain {

using detail::child_path;
using detail::index_path;
using detail::ordered_json;

// --- churn schedule --------------------------------------------------------

std::map<std::string, ChurnValues> churn_schedule_values(const ChurnSchedule& schedule,
                                                         const std::vector<std::string>& services) {
  const std::set<std::string> known(services.begin(), services.end());
  std::vector<Violation> problems;
  std::map<std::string, std::optional<double>> h;
  std::map<std::string, std::optional<double>> g;

  auto run = [&](const std::vector<std::string>& order, double base, double step, const std::string& name,
                 std::map<std::string, std::optional<double>>& out) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::string path = index_path("churn_schedule." + name, k);
      if (!known.contains(order[k])) {
        problems.push_back({path, "unknown service '" + order[k] + "'"});
        continue;
      }
      out[order[k]] = base - double(order.size() - 1 - k) * step;
    }
  };
  run(schedule.h_order, schedule.h_base, schedule.mu, "h_order", h);
  run(schedule.g_order, schedule.g_base, schedule.nu, "g_order", g);

  for (const auto& [id, o] : schedule.overrides) {
    if (!known.contains(id)) {
      problems.push_back({"churn_schedule.overrides." + id, "unknown service '" + id + "'"});
      continue;
    }
    if (o.h) h[id] = *o.h;
    if (o.g) g[id] = *o.g;
  }

  std::map<std::string, ChurnValues> out;
  for (const auto& id : services) {
    const auto hv = h[id];
    const auto gv = g[id];
    if (!hv) problems.push_back({"churn_schedule", "no h value for service '" + id + "'"});
    if (!gv) problems.push_back({"churn_schedule", "no g value for service '" + id + "'"});
    if (hv && !(*hv >= 0.0 && *hv <= 1.0))
      problems.push_back({"churn_schedule", "h(" + id + ") = " + std::to_string(*hv) + " is outside [0,1]"});
    if (gv && !(*gv >= 0.0 && *gv <= 1.0))
      problems.push_back({"churn_schedule", "g(" + id + ") = " + std::to_string(*gv) + " is outside [0,1]"});
    out[id] = {hv.value_or(0.0), gv.value_or(0.0)};
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return out;
}

// --- derived fields --------------------------------------------------------

Market apply_uplift(const MarketDataset& dataset, std::string_view scenario) {
  auto it = dataset.uplift_scenarios.find(std::string(scenario));
  if (it == dataset.uplift_scenarios.end()) throw ModelError("unknown uplift scenario '" + std::string(scenario) + "'");
  Market market = dataset.market;
  for (auto& s : market.services) {
    UpliftFactors f;
    if (auto fit = it->second.find(s.id); fit != it->second.end()) f = fit->second;
    s.post_engagement_min_per_day = s.engagement_min_per_day * f.engagement_factor;
    s.post_traffic_mb_per_min = s.traffic_mb_per_min * f.traffic_factor;
  }
  return market;
}

void refresh_derived_fields(MarketDataset& dataset) {
  std::vector<std::string> ids;
  for (const auto& s : dataset.market.services) ids.push_back(s.id);
  const auto values = churn_schedule_values(dataset.churn_schedule, ids);
  for (auto& s : dataset.market.services) {
    s.isp_churn_prob = values.at(s.id).h;
    s.csp_churn_prob = values.at(s.id).g;
  }
  dataset.market = apply_uplift(dataset, dataset.default_uplift);
}

double derive_isp_unit_profit(double price_usd, double provisioning_cost_fraction) {
  return price_usd * (1.0 - provisioning_cost_fraction);
}

std::map<std::string, double> derive_ad_rates(const AdRateInputs& in) {
  double profit = 0.0;
  for (const auto& [csp, p] : in.csp_quarterly_profit_usd) profit += p;
  double split_total = 0.0;
  for (const auto& [service, f] : in.ad_format_split) split_total += f;
  if (split_total <= 0.0) throw ModelError("ad format split sums to zero");
  if (in.population <= 0.0 || in.days_per_month <= 0.0) throw ModelError("population and month length must be positive");

  std::map<std::string, double> out;
  for (const auto& [service, f] : in.ad_format_split) {
    auto it = in.engagement_min_per_day.find(service);
    if (it == in.engagement_min_per_day.end() || it->second <= 0.0)
      throw ModelError("no positive engagement time for service '" + service + "'");
    const double monthly = profit * (f / split_total) / 3.0;
    out[service] = monthly / (it->second * in.days_per_month * in.population);
  }
  return out;
}

AdRateInputs us2013_ad_rate_inputs() {
  AdRateInputs in;
  in.csp_quarterly_profit_usd = {
      {"google", 294.29e6}, {"aol", 2.42e6}, {"microsoft", 37.15e6}, {"yahoo", 23.39e6}, {"facebook", 68.02e6}};
  // Display and rich media (22%) split 80/20 between OSN and gaming.
  in.ad_format_split = {{"search", 0.43}, {"video", 0.07}, {"osn", 0.22 * 0.8}, {"gaming", 0.22 * 0.2}};
  in.engagement_min_per_day = {{"video", 11.8}, {"osn", 15.2}, {"search", 6.72}, {"gaming", 7.45}};
  // Subscribers of the five named access ISPs.
  in.population = 19'025'000.0 + 11'306'000.0 + 4'590'000.0 + 3'917'000.0 + 3'060'000.0;
  in.days_per_month = 30.0;
  return in;
}

// --- built-in dataset ------------------------------------------------------

MarketDataset builtin_us_dataset() {
  MarketDataset d;
  d.id = std::string(kBuiltinDatasetId);
  d.description = "US broadband and online services market, 2012-2014 figures";

  auto service = [](std::string id, double engagement, double traffic, double ad_rate, double importance) {
    ServiceSpec s;
    s.id = std::move(id);
    s.engagement_min_per_day = engagement;
    s.traffic_mb_per_min = traffic;
    s.ad_rate_usd_per_min = ad_rate;
    s.post_ad_rate_usd_per_min = ad_rate;
    s.importance_weight = importance;
    return s;
  };
  d.market.services = {
      service("video", 11.8, 7.5, 0.00092, 0.1469),
      service("osn", 15.2, 0.84, 0.00181, 0.1895),
      service("search", 6.72, 0.054, 0.01002, 0.0836),
      service("gaming", 7.45, 0.051, 0.00092, 0.0927),
      service("commercial_video", 39.14, 22.5, 0.0, 0.4873),
  };

  const double unit_profit = derive_isp_unit_profit(20.0, 0.4645);
  auto isp = [&](std::string id, double subscribers, bool passive) {
    AccessIsp i;
    i.id = std::move(id);
    i.subscribers = subscribers;
    i.profit_per_customer_usd_per_month = unit_profit;
    i.post_profit_per_customer_usd_per_month = unit_profit;
    i.loyalty = 0.95;
    i.transit_unit_cost = 1000.0;
    i.passive = passive;
    return i;
  };
  d.market.isps = {
      isp("comcast", 19'025'000, false),   isp("time_warner", 11'306'000, false),
      isp("cox", 4'590'000, false),        isp("charter", 3'917'000, false),
      isp("cablevision", 3'060'000, false), isp("others", 3'872'800, true),
  };

  // OSN shares as published add up to 102.61%; they are rescaled to 100%.
  const double osn_total = 0.296 + 0.0406 + 0.6895;
  auto csp = [](std::string id, std::map<std::string, double> shares) {
    ContentProvider c;
    c.id = std::move(id);
    c.loyalty = 0.80;
    c.transit_unit_cost = 1000.0;
    c.service_shares = std::move(shares);
    return c;
  };
  auto subscription = [](double price, double ad_rate) {
    return RevenueTerms{price, price, ad_rate, ad_rate};
  };
  d.market.csps = {
      csp("google", {{"video", 0.3939}, {"osn", 0.296 / osn_total}, {"search", 0.6916}, {"gaming", 0.2}}),
      csp("microsoft", {{"video", 0.0889}, {"search", 0.1885}, {"gaming", 0.2}}),
      csp("yahoo", {{"video", 0.1319}, {"osn", 0.0406 / osn_total}, {"search", 0.1056}, {"gaming", 0.2}}),
      csp("facebook", {{"video", 0.2201}, {"osn", 0.6895 / osn_total}, {"gaming", 0.2}}),
      csp("aol", {{"video", 0.1652}, {"search", 0.0143}, {"gaming", 0.2}}),
      csp("netflix", {{"commercial_video", 0.38}}),
      csp("amazon_prime", {{"commercial_video", 0.13}}),
      csp("hulu_plus", {{"commercial_video", 0.06}}),
  };
  d.market.csps[5].revenue_overrides["commercial_video"] = subscription(7.99, 0.0);
  d.market.csps[6].revenue_overrides["commercial_video"] = subscription(99.0 / 12.0, 0.0);
  d.market.csps[7].revenue_overrides["commercial_video"] = subscription(7.99, 27.61 / 1000.0 / 2.0);

  d.churn_schedule.h_base = 0.4;
  d.churn_schedule.mu = 0.1;
  d.churn_schedule.h_order = {"search", "video", "osn", "gaming"};
  d.churn_schedule.g_base = 0.4;
  d.churn_schedule.nu = 0.1;
  d.churn_schedule.g_order = {"gaming", "osn", "video", "search"};
  d.churn_schedule.overrides["commercial_video"] = {0.2, 0.3};  // same as user video

  const UpliftFactors video_traffic{1.0, 2.1};
  const UpliftFactors movie_traffic{1.0, 4.0};
  d.uplift_scenarios["none"] = {};
  d.uplift_scenarios["conservative"] = {
      {"video", {1.0748, video_traffic.traffic_factor}},
      {"search", {1.002, 1.0}},
      {"commercial_video", movie_traffic},
  };
  d.uplift_scenarios["optimistic"] = {
      {"video", {2.0, video_traffic.traffic_factor}}, {"osn", {2.0, 1.0}}, {"search", {2.0, 1.0}},
      {"gaming", {2.0, 1.0}}, {"commercial_video", {2.0, movie_traffic.traffic_factor}},
  };
  d.default_uplift = "optimistic";

  d.cost_model = CostModel{};
  d.cdn_offer_usd_per_gbps_month = 4000.0;
  d.loyalty_bounds = {0.77, 0.95, 0.36, 0.80};

  d.provenance = {
      {"services.engagement_min_per_day",
       "Daily minutes per user: YouTube and Facebook averages (Statistic Brain); Netflix viewing time (103 min/day) "
       "scaled by its 38% coverage; gaming from Nielsen 2010 (6.01 min) grown 6% per year."},
      {"services.importance_weight", "Each service's share of total daily engagement minutes."},
      {"services.traffic_mb_per_min",
       "Commercial video at DVD quality; user video at 480p; OSN from Sandvine 2014 (19.4 GB median monthly use, "
       "Facebook 1.99% of peak traffic); gaming 0.12% of video traffic (Cisco VNI 2012); search assumed equal to "
       "gaming."},
      {"services.ad_rate_usd_per_min",
       "US quarterly CSP net income split by IAB ad-format shares (search 43%, video 7%, display 22% split 80/20 "
       "between OSN and gaming), over the engagement minutes of the named access ISPs' subscribers."},
      {"csps.service_shares",
       "comScore 2014 (search, video), socialfresh.com 2014 (OSN, rescaled from a 102.61% total), uniform gaming "
       "(assumption), Nielsen 2013 (subscription video)."},
      {"csps.revenue_overrides",
       "List prices: Netflix $7.99/month, Amazon Prime $99/year, Hulu Plus $7.99/month. Hulu ad rate is an "
       "assumption: $27.61 average CPM with one impression per two minutes of viewing."},
      {"isps.subscribers", "Leichtman Research Group, US broadband subscribers, Q3 2012."},
      {"isps.profit_per_customer_usd_per_month",
       "ITU average US broadband price $20.00 (2010) less a 46.45% provisioning cost (CMT)."},
      {"isps.passive", "The 'others' bucket loses customers to peering rivals but never peers itself."},
      {"loyalty",
       "Worst-case max/min market-share ratios: Cablevision 0.77 and Time Warner 0.95 (ISPs); AOL search 0.36 and "
       "Microsoft video 0.80 (CSPs). Entity defaults sit at the upper bounds."},
      {"churn_schedule",
       "Linear ordering assumption: ISP churn rises from search to gaming, CSP churn the reverse. Commercial video "
       "follows user video (assumption)."},
      {"uplift_scenarios",
       "Conservative: latency studies (Akamai, Google, Microsoft) show +7.48% video and +0.2% search engagement. "
       "Optimistic: engagement doubles. Traffic: user video 480p to 720p (x2.1), commercial video x4."},
      {"cost_model",
       "Transit $1K per Gbps/month (FierceWireless 2013). IXP fees from the ESpanix price list: $2700/year "
       "membership, $14000/year per 10G port."},
      {"cdn_offer_usd_per_gbps_month", "CDN pricing survey, StreamingMedia 2012."},
  };

  refresh_derived_fields(d);
  return d;
}

// --- validation ------------------------------------------------------------

std::vector<Violation> validate(const MarketDataset& d) {
  std::vector<Violation> v;
  auto check = [&](bool ok, std::string path, std::string message) {
    if (!ok) v.push_back({std::move(path), std::move(message)});
  };
  auto non_negative = [&](double x, const std::string& path) { check(x >= 0.0, path, "must be >= 0"); };
  auto unit = [&](double x, const std::string& path) { check(x >= 0.0 && x <= 1.0, path, "must be within [0,1]"); };

  check(d.schema_version == kDatasetSchemaVersion, "schema_version",
        "unsupported schema version " + std::to_string(d.schema_version));
  check(!d.id.empty(), "id", "must not be empty");
  check(!d.market.services.empty(), "services", "at least one service is required");
  check(!d.market.isps.empty(), "isps", "at least one isp is required");

  std::set<std::string> services;
  double importance = 0.0;
  for (std::size_t k = 0; k < d.market.services.size(); ++k) {
    const ServiceSpec& s = d.market.services[k];
    const std::string p = index_path("services", k);
    check(!s.id.empty(), p + ".id", "must not be empty");
    check(s.id != kNoProvider, p + ".id", "'NONE' is reserved");
    check(services.insert(s.id).second, p + ".id", "duplicate service id '" + s.id + "'");
    unit(s.isp_churn_prob, p + ".isp_churn_prob");
    unit(s.csp_churn_prob, p + ".csp_churn_prob");
    non_negative(s.engagement_min_per_day, p + ".engagement_min_per_day");
    non_negative(s.post_engagement_min_per_day, p + ".post_engagement_min_per_day");
    non_negative(s.traffic_mb_per_min, p + ".traffic_mb_per_min");
    non_negative(s.post_traffic_mb_per_min, p + ".post_traffic_mb_per_min");
    non_negative(s.ad_rate_usd_per_min, p + ".ad_rate_usd_per_min");
    non_negative(s.post_ad_rate_usd_per_min, p + ".post_ad_rate_usd_per_min");
    non_negative(s.subscription_usd_per_month, p + ".subscription_usd_per_month");
    non_negative(s.post_subscription_usd_per_month, p + ".post_subscription_usd_per_month");
    unit(s.importance_weight, p + ".importance_weight");
    importance += s.importance_weight;
  }
  if (!d.market.services.empty())
    check(std::abs(importance - 1.0) <= 1e-9, "services", "importance weights sum to " + std::to_string(importance) + ", not 1");

  std::set<std::string> isps;
  for (std::size_t k = 0; k < d.market.isps.size(); ++k) {
    const AccessIsp& i = d.market.isps[k];
    const std::string p = index_path("isps", k);
    check(!i.id.empty(), p + ".id", "must not be empty");
    check(isps.insert(i.id).second, p + ".id", "duplicate isp id '" + i.id + "'");
    non_negative(i.subscribers, p + ".subscribers");
    non_negative(i.profit_per_customer_usd_per_month, p + ".profit_per_customer_usd_per_month");
    non_negative(i.post_profit_per_customer_usd_per_month, p + ".post_profit_per_customer_usd_per_month");
    unit(i.loyalty, p + ".loyalty");
    non_negative(i.transit_unit_cost, p + ".transit_unit_cost");
  }

  std::set<std::string> csps;
  std::map<std::string, double> coverage;
  for (std::size_t k = 0; k < d.market.csps.size(); ++k) {
    const ContentProvider& c = d.market.csps[k];
    const std::string p = index_path("csps", k);
    check(!c.id.empty(), p + ".id", "must not be empty");
    check(c.id != kNoProvider, p + ".id", "'NONE' is reserved");
    check(csps.insert(c.id).second, p + ".id", "duplicate csp id '" + c.id + "'");
    unit(c.loyalty, p + ".loyalty");
    non_negative(c.transit_unit_cost, p + ".transit_unit_cost");
    for (const auto& [service, share] : c.service_shares) {
      const std::string sp = p + ".service_shares." + service;
      check(services.contains(service), sp, "unknown service '" + service + "'");
      unit(share, sp);
      coverage[service] += share;
    }
    for (const auto& [service, terms] : c.revenue_overrides) {
      const std::string rp = p + ".revenue_overrides." + service;
      check(services.contains(service), rp, "unknown service '" + service + "'");
      check(c.share(service) > 0.0, rp, "csp has no share in service '" + service + "'");
      non_negative(terms.subscription_usd_per_month, rp + ".subscription_usd_per_month");
      non_negative(terms.post_subscription_usd_per_month, rp + ".post_subscription_usd_per_month");
      non_negative(terms.ad_rate_usd_per_min, rp + ".ad_rate_usd_per_min");
      non_negative(terms.post_ad_rate_usd_per_min, rp + ".post_ad_rate_usd_per_min");
    }
  }
  for (const auto& [service, total] : coverage) {
    if (services.contains(service))
      check(total <= 1.0 + kShareTolerance, "services." + service,
            "csp shares for service '" + service + "' sum to " + std::to_string(total) + ", more than 1");
  }

  std::vector<std::string> ids;
  for (const auto& s : d.market.services) ids.push_back(s.id);
  try {
    churn_schedule_values(d.churn_schedule, ids);
  } catch (const ValidationError& e) {
    v.insert(v.end(), e.violations().begin(), e.violations().end());
  }

  check(d.uplift_scenarios.contains(d.default_uplift), "default_uplift",
        "unknown uplift scenario '" + d.default_uplift + "'");
  for (const auto& [name, scenario] : d.uplift_scenarios) {
    for (const auto& [service, f] : scenario) {
      const std::string up = "uplift_scenarios." + name + "." + service;
      check(services.contains(service), up, "unknown service '" + service + "'");
      non_negative(f.engagement_factor, up + ".engagement_factor");
      non_negative(f.traffic_factor, up + ".traffic_factor");
    }
  }

  const CostModel& c = d.cost_model;
  non_negative(c.transit_unit_cost_default, "cost_model.transit_unit_cost_default");
  non_negative(c.ixp_annual_membership, "cost_model.ixp_annual_membership");
  non_negative(c.ixp_port_annual_fee, "cost_model.ixp_port_annual_fee");
  check(c.ixp_port_capacity > 0.0, "cost_model.ixp_port_capacity", "must be > 0");
  check(c.headroom_factor >= 1.0, "cost_model.headroom_factor", "must be >= 1");
  non_negative(c.cdn_unit_cost, "cost_model.cdn_unit_cost");
  check(c.days_per_month > 0.0, "cost_model.days_per_month", "must be > 0");
  non_negative(d.cdn_offer_usd_per_gbps_month, "cdn_offer_usd_per_gbps_month");

  const LoyaltyBounds& b = d.loyalty_bounds;
  unit(b.beta_low, "loyalty_bounds.beta_low");
  unit(b.beta_high, "loyalty_bounds.beta_high");
  unit(b.theta_low, "loyalty_bounds.theta_low");
  unit(b.theta_high, "loyalty_bounds.theta_high");
  check(b.beta_low <= b.beta_high, "loyalty_bounds", "beta_low exceeds beta_high");
  check(b.theta_low <= b.theta_high, "loyalty_bounds", "theta_low exceeds theta_high");
  return v;
}

// --- serialization ---------------------------------------------------------

namespace {

ordered_json terms_to_json(const RevenueTerms& t) {
  return {{"subscription_usd_per_month", t.subscription_usd_per_month},
          {"post_subscription_usd_per_month", t.post_subscription_usd_per_month},
          {"ad_rate_usd_per_min", t.ad_rate_usd_per_min},
          {"post_ad_rate_usd_per_min", t.post_ad_rate_usd_per_min}};
}

}  // namespace

ordered_json dataset_to_json(const MarketDataset& d) {
  ordered_json out;
  out["schema_version"] = d.schema_version;
  out["id"] = d.id;
  out["description"] = d.description;

  auto services = ordered_json::array();
  for (const auto& s : d.market.services) {
    services.push_back({{"id", s.id},
                        {"engagement_min_per_day", s.engagement_min_per_day},
                        {"traffic_mb_per_min", s.traffic_mb_per_min},
                        {"ad_rate_usd_per_min", s.ad_rate_usd_per_min},
                        {"post_ad_rate_usd_per_min", s.post_ad_rate_usd_per_min},
                        {"subscription_usd_per_month", s.subscription_usd_per_month},
                        {"post_subscription_usd_per_month", s.post_subscription_usd_per_month},
                        {"importance_weight", s.importance_weight}});
  }
  out["services"] = std::move(services);

  auto isps = ordered_json::array();
  for (const auto& i : d.market.isps) {
    isps.push_back({{"id", i.id},
                    {"subscribers", i.subscribers},
                    {"profit_per_customer_usd_per_month", i.profit_per_customer_usd_per_month},
                    {"post_profit_per_customer_usd_per_month", i.post_profit_per_customer_usd_per_month},
                    {"loyalty", i.loyalty},
                    {"transit_unit_cost", i.transit_unit_cost},
                    {"passive", i.passive}});
  }
  out["isps"] = std::move(isps);

  auto csps = ordered_json::array();
  for (const auto& c : d.market.csps) {
    ordered_json shares = ordered_json::object();
    for (const auto& s : d.market.services) {
      if (auto it = c.service_shares.find(s.id); it != c.service_shares.end()) shares[s.id] = it->second;
    }
    ordered_json overrides = ordered_json::object();
    for (const auto& [service, terms] : c.revenue_overrides) overrides[service] = terms_to_json(terms);
    csps.push_back({{"id", c.id},
                    {"loyalty", c.loyalty},
                    {"transit_unit_cost", c.transit_unit_cost},
                    {"service_shares", std::move(shares)},
                    {"revenue_overrides", std::move(overrides)}});
  }
  out["csps"] = std::move(csps);

  const ChurnSchedule& cs = d.churn_schedule;
  ordered_json overrides = ordered_json::object();
  for (const auto& [service, o] : cs.overrides) {
    ordered_json entry = ordered_json::object();
    if (o.h) entry["h"] = *o.h;
    if (o.g) entry["g"] = *o.g;
    overrides[service] = std::move(entry);
  }
  out["churn_schedule"] = {{"h_base", cs.h_base}, {"mu", cs.mu},       {"h_order", cs.h_order},
                           {"g_base", cs.g_base}, {"nu", cs.nu},       {"g_order", cs.g_order},
                           {"overrides", std::move(overrides)}};

  ordered_json uplift = ordered_json::object();
  for (const auto& [name, scenario] : d.uplift_scenarios) {
    ordered_json entry = ordered_json::object();
    for (const auto& [service, f] : scenario)
      entry[service] = {{"engagement_factor", f.engagement_factor}, {"traffic_factor", f.traffic_factor}};
    uplift[name] = std::move(entry);
  }
  out["uplift_scenarios"] = std::move(uplift);
  out["default_uplift"] = d.default_uplift;

  const CostModel& c = d.cost_model;
  out["cost_model"] = {{"transit_unit_cost_default", c.transit_unit_cost_default},
                       {"ixp_annual_membership", c.ixp_annual_membership},
                       {"ixp_port_annual_fee", c.ixp_port_annual_fee},
                       {"ixp_port_capacity", c.ixp_port_capacity},
                       {"headroom_factor", c.headroom_factor},
                       {"cdn_unit_cost", c.cdn_unit_cost},
                       {"days_per_month", c.days_per_month}};
  out["cdn_offer_usd_per_gbps_month"] = d.cdn_offer_usd_per_gbps_month;
  out["loyalty_bounds"] = {{"beta_low", d.loyalty_bounds.beta_low},
                           {"beta_high", d.loyalty_bounds.beta_high},
                           {"theta_low", d.loyalty_bounds.theta_low},
                           {"theta_high", d.loyalty_bounds.theta_high}};
  ordered_json provenance = ordered_json::object();
  for (const auto& [k, text] : d.provenance) provenance[k] = text;
  out["provenance"] = std::move(provenance);
  return out;
}

MarketDataset dataset_from_json(const ordered_json& doc, const std::string& origin) {
  const detail::Reader r(origin);
  r.only_fields(doc, "",
                {"schema_version", "id", "description", "services", "isps", "csps", "churn_schedule",
                 "uplift_scenarios", "default_uplift", "cost_model", "cdn_offer_usd_per_gbps_month", "loyalty_bounds",
                 "provenance"});
  MarketDataset d;
  d.schema_version = static_cast<int>(r.count(r.field(doc, "", "schema_version"), "schema_version"));
  if (d.schema_version != kDatasetSchemaVersion)
    r.fail("schema_version", "unsupported schema version " + std::to_string(d.schema_version));
  d.id = r.string_field(doc, "", "id");
  d.description = r.string_field(doc, "", "description", "");

  const auto& services = r.array(r.field(doc, "", "services"), "services");
  for (std::size_t k = 0; k < services.size(); ++k) {
    const std::string p = index_path("services", k);
    const auto& j = services[k];
    r.only_fields(j, p,
                  {"id", "engagement_min_per_day", "traffic_mb_per_min", "ad_rate_usd_per_min",
                   "post_ad_rate_usd_per_min", "subscription_usd_per_month", "post_subscription_usd_per_month",
                   "importance_weight"});
    ServiceSpec s;
    s.id = r.string_field(j, p, "id");
    s.engagement_min_per_day = r.number_field(j, p, "engagement_min_per_day");
    s.traffic_mb_per_min = r.number_field(j, p, "traffic_mb_per_min");
    s.ad_rate_usd_per_min = r.number_field(j, p, "ad_rate_usd_per_min", 0.0);
    s.post_ad_rate_usd_per_min = r.number_field(j, p, "post_ad_rate_usd_per_min", s.ad_rate_usd_per_min);
    s.subscription_usd_per_month = r.number_field(j, p, "subscription_usd_per_month", 0.0);
    s.post_subscription_usd_per_month =
        r.number_field(j, p, "post_subscription_usd_per_month", s.subscription_usd_per_month);
    s.importance_weight = r.number_field(j, p, "importance_weight");
    d.market.services.push_back(std::move(s));
  }

  d.cost_model = CostModel{};
  if (const auto* cm = r.optional_field(doc, "cost_model")) {
    const std::string p = "cost_model";
    r.only_fields(*cm, p,
                  {"transit_unit_cost_default", "ixp_annual_membership", "ixp_port_annual_fee", "ixp_port_capacity",
                   "headroom_factor", "cdn_unit_cost", "days_per_month"});
    CostModel& c = d.cost_model;
    c.transit_unit_cost_default = r.number_field(*cm, p, "transit_unit_cost_default", c.transit_unit_cost_default);
    c.ixp_annual_membership = r.number_field(*cm, p, "ixp_annual_membership", c.ixp_annual_membership);
    c.ixp_port_annual_fee = r.number_field(*cm, p, "ixp_port_annual_fee", c.ixp_port_annual_fee);
    c.ixp_port_capacity = r.number_field(*cm, p, "ixp_port_capacity", c.ixp_port_capacity);
    c.headroom_factor = r.number_field(*cm, p, "headroom_factor", c.headroom_factor);
    c.cdn_unit_cost = r.number_field(*cm, p, "cdn_unit_cost", c.cdn_unit_cost);
    c.days_per_month = r.number_field(*cm, p, "days_per_month", c.days_per_month);
  }
  const double default_transit = d.cost_model.transit_unit_cost_default;

  const auto& isps = r.array(r.field(doc, "", "isps"), "isps");
  for (std::size_t k = 0; k < isps.size(); ++k) {
    const std::string p = index_path("isps", k);
    const auto& j = isps[k];
    r.only_fields(j, p,
                  {"id", "subscribers", "profit_per_customer_usd_per_month", "post_profit_per_customer_usd_per_month",
                   "loyalty", "transit_unit_cost", "passive"});
    AccessIsp i;
    i.id = r.string_field(j, p, "id");
    i.subscribers = r.number_field(j, p, "subscribers");
    i.profit_per_customer_usd_per_month = r.number_field(j, p, "profit_per_customer_usd_per_month");
    i.post_profit_per_customer_usd_per_month =
        r.number_field(j, p, "post_profit_per_customer_usd_per_month", i.profit_per_customer_usd_per_month);
    i.loyalty = r.number_field(j, p, "loyalty");
    i.transit_unit_cost = r.number_field(j, p, "transit_unit_cost", default_transit);
    i.passive = r.bool_field(j, p, "passive", false);
    d.market.isps.push_back(std::move(i));
  }

  const auto& csps = r.array(r.field(doc, "", "csps"), "csps");
  for (std::size_t k = 0; k < csps.size(); ++k) {
    const std::string p = index_path("csps", k);
    const auto& j = csps[k];
    r.only_fields(j, p, {"id", "loyalty", "transit_unit_cost", "service_shares", "revenue_overrides"});
    ContentProvider c;
    c.id = r.string_field(j, p, "id");
    c.loyalty = r.number_field(j, p, "loyalty");
    c.transit_unit_cost = r.number_field(j, p, "transit_unit_cost", default_transit);
    const auto& shares = r.object(r.field(j, p, "service_shares"), p + ".service_shares");
    for (const auto& item : shares.items())
      c.service_shares[item.key()] = r.number(item.value(), p + ".service_shares." + item.key());
    if (const auto* ro = r.optional_field(j, "revenue_overrides")) {
      r.object(*ro, p + ".revenue_overrides");
      for (const auto& item : ro->items()) {
        const std::string rp = p + ".revenue_overrides." + item.key();
        const auto& t = item.value();
        r.only_fields(t, rp,
                      {"subscription_usd_per_month", "post_subscription_usd_per_month", "ad_rate_usd_per_min",
                       "post_ad_rate_usd_per_min"});
        RevenueTerms terms;
        terms.subscription_usd_per_month = r.number_field(t, rp, "subscription_usd_per_month", 0.0);
        terms.post_subscription_usd_per_month =
            r.number_field(t, rp, "post_subscription_usd_per_month", terms.subscription_usd_per_month);
        terms.ad_rate_usd_per_min = r.number_field(t, rp, "ad_rate_usd_per_min", 0.0);
        terms.post_ad_rate_usd_per_min = r.number_field(t, rp, "post_ad_rate_usd_per_min", terms.ad_rate_usd_per_min);
        c.revenue_overrides[item.key()] = terms;
      }
    }
    d.market.csps.push_back(std::move(c));
  }

  {
    const std::string p = "churn_schedule";
    const auto& j = r.field(doc, "", "churn_schedule");
    r.only_fields(j, p, {"h_base", "mu", "h_order", "g_base", "nu", "g_order", "overrides"});
    ChurnSchedule& cs = d.churn_schedule;
    cs.h_base = r.number_field(j, p, "h_base");
    cs.mu = r.number_field(j, p, "mu", 0.0);
    cs.g_base = r.number_field(j, p, "g_base");
    cs.nu = r.number_field(j, p, "nu", 0.0);
    auto order = [&](std::string_view key) {
      std::vector<std::string> out;
      if (const auto* o = r.optional_field(j, key)) {
        const std::string op = child_path(p, key);
        r.array(*o, op);
        for (std::size_t k = 0; k < o->size(); ++k) out.push_back(r.string((*o)[k], index_path(op, k)));
      }
      return out;
    };
    cs.h_order = order("h_order");
    cs.g_order = order("g_order");
    if (const auto* o = r.optional_field(j, "overrides")) {
      r.object(*o, p + ".overrides");
      for (const auto& item : o->items()) {
        const std::string op = p + ".overrides." + item.key();
        r.only_fields(item.value(), op, {"h", "g"});
        cs.overrides[item.key()] = {r.optional_number(item.value(), op, "h"), r.optional_number(item.value(), op, "g")};
      }
    }
  }

  {
    const auto& j = r.object(r.field(doc, "", "uplift_scenarios"), "uplift_scenarios");
    for (const auto& scenario : j.items()) {
      const std::string sp = "uplift_scenarios." + scenario.key();
      r.object(scenario.value(), sp);
      UpliftScenario factors;
      for (const auto& item : scenario.value().items()) {
        const std::string fp = sp + "." + item.key();
        r.only_fields(item.value(), fp, {"engagement_factor", "traffic_factor"});
        factors[item.key()] = {r.number_field(item.value(), fp, "engagement_factor", 1.0),
                               r.number_field(item.value(), fp, "traffic_factor", 1.0)};
      }
      d.uplift_scenarios[scenario.key()] = std::move(factors);
    }
  }
  d.default_uplift = r.string_field(doc, "", "default_uplift");
  d.cdn_offer_usd_per_gbps_month = r.number_field(doc, "", "cdn_offer_usd_per_gbps_month", 0.0);

  if (const auto* lb = r.optional_field(doc, "loyalty_bounds")) {
    const std::string p = "loyalty_bounds";
    r.only_fields(*lb, p, {"beta_low", "beta_high", "theta_low", "theta_high"});
    d.loyalty_bounds = {r.number_field(*lb, p, "beta_low", 0.0), r.number_field(*lb, p, "beta_high", 1.0),
                        r.number_field(*lb, p, "theta_low", 0.0), r.number_field(*lb, p, "theta_high", 1.0)};
  }
  if (const auto* pv = r.optional_field(doc, "provenance")) {
    r.object(*pv, "provenance");
    for (const auto& item : pv->items()) d.provenance[item.key()] = r.string(item.value(), "provenance." + item.key());
  }
  return d;
}

MarketDataset parse_dataset(std::string_view text, const std::string& origin) {
  MarketDataset d = dataset_from_json(detail::parse_json_text(text, origin), origin);
  auto problems = validate(d);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  refresh_derived_fields(d);
  return d;
}

MarketDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "<file>", "cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_dataset(text.str(), path.string());
}

// --- catalog ---------------------------------------------------------------

DatasetCatalog::DatasetCatalog(std::optional<std::filesystem::path> search_dir, bool allow_paths)
    : search_dir_(std::move(search_dir)), allow_paths_(allow_paths) {}

std::optional<std::filesystem::path> DatasetCatalog::environment_search_dir() {
  const char* dir = std::getenv("PEERBARGAIN_DATASET_DIR");
  if (dir && *dir) return std::filesystem::path(dir);
  return std::nullopt;
}

std::vector<std::string> DatasetCatalog::list() const {
  std::vector<std::string> ids{std::string(kBuiltinDatasetId)};
  if (search_dir_) {
    std::error_code ec;
    std::vector<std::string> found;
    for (const auto& entry : std::filesystem::directory_iterator(*search_dir_, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        std::string id = entry.path().stem().string();
        if (id != kBuiltinDatasetId) found.push_back(std::move(id));
      }
    }
    std::sort(found.begin(), found.end());
    ids.insert(ids.end(), found.begin(), found.end());
  }
  return ids;
}

bool DatasetCatalog::contains(const std::string& id) const {
  const auto ids = list();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::shared_ptr<const MarketDataset> DatasetCatalog::get(const std::string& ref) const {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(ref); it != cache_.end()) return it->second;

  std::shared_ptr<const MarketDataset> d;
  const bool looks_like_path = ref.find('/') != std::string::npos || ref.ends_with(".json");
  if (ref == kBuiltinDatasetId) {
    d = std::make_shared<const MarketDataset>(builtin_us_dataset());
  } else if (looks_like_path) {
    if (!allow_paths_) throw ModelError("dataset paths are not accepted here: '" + ref + "'");
    d = std::make_shared<const MarketDataset>(load_dataset(ref));
  } else if (search_dir_ && std::filesystem::is_regular_file(*search_dir_ / (ref + ".json"))) {
    d = std::make_shared<const MarketDataset>(load_dataset(*search_dir_ / (ref + ".json")));
  } else {
    throw ModelError("unknown dataset '" + ref + "'");
  }
  cache_[ref] = d;
  return d;
}

}  // namespace peerbargain
