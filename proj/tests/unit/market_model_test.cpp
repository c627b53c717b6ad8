#include <array>

#include "doctest.h"
#include "peerbargain/error.hpp"
#include "peerbargain/market_model.hpp"
#include "../support/toy.hpp"

using namespace peerbargain;

namespace {

// Type index for (preferred, search provider, video provider); slots follow
// CSP declaration order so csp1 = 0, csp2 = 1.
std::size_t type_of(const TypeSpace& types, std::size_t pref, std::size_t search, std::size_t video) {
  const std::array<std::size_t, 2> slots{search, video};
  return types.type_index(pref, slots);
}

}  // namespace

TEST_CASE("toy market type space has 8 types per ISP") {
  auto state = initialize_market(toy::market());
  CHECK(state.types().types_per_isp() == 8);
  CHECK(state.types().provider_combinations() == 4);
  CHECK(state.counts().size() == 16);
}

TEST_CASE("toy market initial counts") {
  auto state = initialize_market(toy::market());
  const auto& types = state.types();
  const double isp1[2][2][2] = {{{24, 36}, {12, 18}}, {{8, 12}, {4, 6}}};
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t v = 0; v < 2; ++v) {
        CHECK(state.count(0, type_of(types, p, s, v)) == isp1[p][s][v]);
        CHECK(state.count(1, type_of(types, p, s, v)) == isp1[p][s][v] * 1.5);
      }
  CHECK(state.total() == 300);
  CHECK(isp_population(state, "isp1") == 120);
  CHECK(isp_population(state, std::size_t{1}) == 180);
}

TEST_CASE("customers_of sums every type with the provider") {
  auto state = initialize_market(toy::market());
  CHECK(customers_of(state, "isp1", "csp1", "search") == 80);
  CHECK(customers_of(state, "isp1", "csp2", "video") == 72);
  CHECK(preferred_customers_of(state, 0, 0, 0) == 60);
  CHECK(preferring_population(state, 0, 1) == 30);
  CHECK_THROWS_AS(customers_of(state, "isp9", "csp1", "search"), ModelError);
}

TEST_CASE("uncovered users get a NONE provider slot") {
  auto base = *toy::market();
  base.csps[1].service_shares["video"] = 0.5;  // 10% of video users unserved
  auto state = initialize_market(std::make_shared<const Market>(base));
  const auto& types = state.types();
  REQUIRE(types.slots(1).size() == 3);
  CHECK(types.slot_is_none(1, 2));
  CHECK(types.types_per_isp() == 2 * 2 * 3);
  const auto ct = types.describe(state.market(), 0, type_of(types, 0, 0, 2));
  CHECK(ct.providers[1].second == "NONE");
  CHECK(state.total() == doctest::Approx(300).epsilon(1e-12));
}

TEST_CASE("type space rejects duplicate ids and unserved services") {
  auto m = *toy::market();
  m.csps[1].id = "csp1";
  CHECK_THROWS_AS(build_type_space(m.services, m.csps), ValidationError);

  m = *toy::market();
  m.services.push_back({});
  m.services.back().id = "gaming";
  // gaming has no provider shares but a full NONE slot, which is fine
  CHECK_NOTHROW(build_type_space(m.services, m.csps));
}

TEST_CASE("market state checks its counts") {
  auto market = toy::market();
  auto types = std::make_shared<const TypeSpace>(build_type_space(market->services, market->csps));
  CHECK_THROWS_AS(MarketState(market, types, std::vector<double>(3, 0.0), {}), ModelError);
  std::vector<double> counts(16, 1.0);
  counts[5] = -1.0;
  CHECK_THROWS_AS(MarketState(market, types, counts, {}), ModelError);
}

TEST_CASE("counts snap to the dyadic grid") {
  CHECK(snap_count(12.0) == 12.0);
  CHECK(snap_count(11.999999999999998) == 12.0);
  CHECK(snap_count(kCountResolution / 3) == 0.0);
  CHECK(snap_count(0.75 * kCountResolution) == kCountResolution);
}

TEST_CASE("state json lists every type") {
  auto state = initialize_market(toy::market());
  auto j = state_to_json(state);
  REQUIRE(j["counts"].size() == 16);
  CHECK(j["counts"][0]["isp"] == "isp1");
  CHECK(j["counts"][0]["preferred"] == "search");
  CHECK(j["counts"][0]["providers"]["search"] == "csp1");
  CHECK(j["counts"][0]["n"] == 24.0);
  CHECK(j["ledger"].empty());
}
