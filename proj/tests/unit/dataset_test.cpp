#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "peerbargain/dataset.hpp"
#include "peerbargain/error.hpp"

using namespace peerbargain;
using nlohmann::ordered_json;

namespace {

const ServiceSpec& service(const MarketDataset& d, std::string_view id) {
  return d.market.services[d.market.service_index(id)];
}

bool names_path(const std::vector<Violation>& v, std::string_view fragment) {
  for (const auto& x : v)
    if (x.path.find(fragment) != std::string::npos) return true;
  return false;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("peerbargain-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("builtin dataset carries the published figures") {
  const auto d = builtin_us_dataset();
  CHECK(validate(d).empty());
  CHECK(d.id == "us2013");
  CHECK(d.market.isps[d.market.isp_index("comcast")].subscribers == 19'025'000);
  CHECK(d.market.isps[d.market.isp_index("others")].subscribers == 3'872'800);
  CHECK(d.market.isps[d.market.isp_index("others")].passive);
  CHECK(service(d, "search").ad_rate_usd_per_min == 0.01002);
  CHECK(service(d, "osn").ad_rate_usd_per_min == 0.00181);
  CHECK(d.market.csps[d.market.csp_index("google")].share("search") == 0.6916);
  CHECK(service(d, "commercial_video").engagement_min_per_day == 39.14);
  CHECK(service(d, "commercial_video").importance_weight == 0.4873);
  CHECK(d.market.isps[0].profit_per_customer_usd_per_month == doctest::Approx(10.71));
  CHECK(d.loyalty_bounds == LoyaltyBounds{0.77, 0.95, 0.36, 0.80});
  CHECK(d.cdn_offer_usd_per_gbps_month == 4000);

  // churn schedule
  CHECK(service(d, "search").isp_churn_prob == doctest::Approx(0.1));
  CHECK(service(d, "video").isp_churn_prob == doctest::Approx(0.2));
  CHECK(service(d, "osn").isp_churn_prob == doctest::Approx(0.3));
  CHECK(service(d, "gaming").isp_churn_prob == doctest::Approx(0.4));
  CHECK(service(d, "search").csp_churn_prob == doctest::Approx(0.4));
  CHECK(service(d, "gaming").csp_churn_prob == doctest::Approx(0.1));
  CHECK(service(d, "commercial_video").isp_churn_prob == doctest::Approx(0.2));
  CHECK(service(d, "commercial_video").csp_churn_prob == doctest::Approx(0.3));

  // default uplift is optimistic
  CHECK(service(d, "video").post_engagement_min_per_day == doctest::Approx(23.6));
  CHECK(service(d, "video").post_traffic_mb_per_min == doctest::Approx(15.75));
  CHECK(service(d, "commercial_video").post_traffic_mb_per_min == doctest::Approx(90));

  // every value group has a source note
  for (const char* key : {"services.engagement_min_per_day", "isps.subscribers", "csps.service_shares", "cost_model"})
    CHECK(d.provenance.count(key) == 1);

  double weights = 0;
  for (const auto& s : d.market.services) weights += s.importance_weight;
  CHECK(weights == doctest::Approx(1.0));
}

TEST_CASE("uplift scenarios") {
  const auto d = builtin_us_dataset();
  auto conservative = apply_uplift(d, "conservative");
  const auto& video = conservative.services[conservative.service_index("video")];
  CHECK(video.post_engagement_min_per_day == doctest::Approx(11.8 * 1.0748));
  CHECK(video.post_traffic_mb_per_min == doctest::Approx(7.5 * 2.1));
  CHECK(conservative.services[conservative.service_index("osn")].post_engagement_min_per_day == 15.2);
  auto none = apply_uplift(d, "none");
  for (const auto& s : none.services) {
    CHECK(s.post_engagement_min_per_day == s.engagement_min_per_day);
    CHECK(s.post_traffic_mb_per_min == s.traffic_mb_per_min);
  }
  CHECK_THROWS_AS(apply_uplift(d, "wild"), ModelError);
}

TEST_CASE("churn schedule evaluation") {
  ChurnSchedule s;
  s.h_base = 0.4;
  s.mu = 0.1;
  s.h_order = {"a", "b", "c", "d"};
  s.g_base = 0.4;
  s.nu = 0.1;
  s.g_order = {"d", "c", "b", "a"};
  auto v = churn_schedule_values(s, {"a", "b", "c", "d"});
  CHECK(v["a"].h == doctest::Approx(0.1));
  CHECK(v["d"].h == doctest::Approx(0.4));
  CHECK(v["d"].g == doctest::Approx(0.1));
  CHECK(v["a"].g == doctest::Approx(0.4));

  s.mu = 0;
  v = churn_schedule_values(s, {"a", "b", "c", "d"});
  for (auto& [id, hg] : v) CHECK(hg.h == 0.4);

  s.mu = 0.2;  // a would get -0.2
  CHECK_THROWS_AS(churn_schedule_values(s, {"a", "b", "c", "d"}), ValidationError);

  s.mu = 0.1;
  s.overrides["e"] = {0.5, 0.5};
  v = churn_schedule_values(s, {"a", "b", "c", "d", "e"});
  CHECK(v["e"].h == 0.5);
  CHECK_THROWS_AS(churn_schedule_values(s, {"a", "b", "c", "d", "e", "f"}), ValidationError);
}

TEST_CASE("isp unit profit") {
  CHECK(derive_isp_unit_profit(20.0, 0.4645) == doctest::Approx(10.71));
  CHECK(derive_isp_unit_profit(33.0, 0.0) == 33.0);
  CHECK(derive_isp_unit_profit(33.0, 1.0) == 0.0);
}

TEST_CASE("ad rates derived from published profits") {
  const auto in = us2013_ad_rate_inputs();
  auto rates = derive_ad_rates(in);
  CHECK(rates.at("search") == doctest::Approx(0.01002).epsilon(0.25));
  // the normalized split reproduces the table closely
  CHECK(rates.at("search") == doctest::Approx(0.01002).epsilon(0.01));
  CHECK(rates.at("osn") == doctest::Approx(0.00181).epsilon(0.02));

  auto doubled = in;
  for (auto& [csp, p] : doubled.csp_quarterly_profit_usd) p *= 2;
  auto rates2 = derive_ad_rates(doubled);
  for (auto& [s, r] : rates) CHECK(rates2.at(s) == doctest::Approx(2 * r));

  auto zero = in;
  for (auto& [csp, p] : zero.csp_quarterly_profit_usd) p = 0;
  for (auto& [s, r] : derive_ad_rates(zero)) CHECK(r == 0);

  auto empty = in;
  empty.population = 0;
  CHECK_THROWS_AS(derive_ad_rates(empty), ModelError);
}

TEST_CASE("dataset json round trip") {
  const auto d = builtin_us_dataset();
  const auto text = dataset_to_json(d).dump(2);
  const auto back = parse_dataset(text, "memory");
  CHECK(back == d);
  CHECK(dataset_to_json(back).dump(2) == text);
}

TEST_CASE("dataset violations name the offending field") {
  auto doc = dataset_to_json(builtin_us_dataset());

  SUBCASE("shares above one") {
    doc["csps"][1]["service_shares"]["search"] = 0.7;
    try {
      parse_dataset(doc.dump(), "memory");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      REQUIRE(e.violations().size() == 1);
      CHECK(e.violations()[0].path.find("search") != std::string::npos);
    }
  }
  SUBCASE("share for an unknown service") {
    doc["csps"][0]["service_shares"]["radio"] = 0.1;
    try {
      parse_dataset(doc.dump(), "memory");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(names_path(e.violations(), "radio"));
    }
  }
  SUBCASE("loyalty bounds out of order") {
    doc["loyalty_bounds"]["beta_low"] = 0.99;
    try {
      parse_dataset(doc.dump(), "memory");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(names_path(e.violations(), "loyalty_bounds"));
    }
  }
  SUBCASE("negative subscribers") {
    doc["isps"][2]["subscribers"] = -5;
    try {
      parse_dataset(doc.dump(), "memory");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(names_path(e.violations(), "isps[2].subscribers"));
    }
  }
  SUBCASE("unknown fields are rejected") {
    doc["isps"][0]["colour"] = "blue";
    CHECK_THROWS_AS(parse_dataset(doc.dump(), "memory"), ParseError);
  }
  SUBCASE("wrong types are rejected") {
    doc["isps"][0]["subscribers"] = "many";
    try {
      parse_dataset(doc.dump(), "memory");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.field() == "isps[0].subscribers");
    }
  }
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_dataset("{\n  \"id\": \"x\",\n  oops\n}", "broken.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.origin() == "broken.json");
    CHECK(e.line() == 3);
    CHECK(e.column() > 0);
  }
}

TEST_CASE("catalog resolves ids, files and paths") {
  const auto dir = temp_dir("catalog");
  auto d = builtin_us_dataset();
  d.id = "tiny";
  d.market.isps[0].subscribers = 1000;
  std::ofstream(dir / "tiny.json") << dataset_to_json(d).dump(2);
  std::ofstream(dir / "bad.json") << "{";

  DatasetCatalog catalog(dir);
  CHECK(catalog.list() == std::vector<std::string>{"us2013", "bad", "tiny"});
  CHECK(catalog.contains("tiny"));
  CHECK(catalog.get("tiny")->market.isps[0].subscribers == 1000);
  CHECK(catalog.get("tiny") == catalog.get("tiny"));  // cached
  CHECK(catalog.get("us2013")->id == "us2013");
  CHECK(catalog.get((dir / "tiny.json").string())->id == "tiny");
  CHECK_THROWS_AS(catalog.get("bad"), ParseError);
  CHECK_THROWS_AS(catalog.get("nope"), ModelError);

  DatasetCatalog locked(dir, false);
  CHECK_THROWS_AS(locked.get((dir / "tiny.json").string()), ModelError);
  CHECK(locked.get("tiny")->id == "tiny");

  CHECK(load_dataset(dir / "tiny.json").id == "tiny");
  std::filesystem::remove_all(dir);
}
