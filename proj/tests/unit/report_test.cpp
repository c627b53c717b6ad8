#include <sstream>

#include "doctest.h"
#include "peerbargain/error.hpp"
#include "peerbargain/report.hpp"

using namespace peerbargain;
using nlohmann::ordered_json;

namespace {

const DatasetCatalog& catalog() {
  static const DatasetCatalog c;
  return c;
}

ScenarioSpec spec_with(const char* extra) {
  auto doc = ordered_json::parse(R"({
    "schema_version": 1,
    "name": "report",
    "overrides": {"beta": 0.9, "uplift": "optimistic"},
    "events": [{"isp": "comcast", "csp": "google", "services": ["video"]}]
  })");
  doc.update(ordered_json::parse(extra));
  return scenario_from_json(doc, "test");
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("report formats by name") {
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK(parse_report_format("csv") == ReportFormat::csv);
  CHECK(parse_report_format("markdown") == ReportFormat::markdown);
  CHECK_THROWS_AS(parse_report_format("xml"), ModelError);
}

TEST_CASE("json output parses back to an equal result") {
  for (const auto& r : {run(spec_with("{}"), catalog()),
                        sweep(spec_with(R"({"sweep": {"theta": [0.1, 0.5]}})"), catalog())}) {
    const auto text = emit_report(r, ReportFormat::json);
    CHECK(text.back() == '\n');
    const auto back = result_from_json(ordered_json::parse(text));
    CHECK(back == r);
    CHECK(emit_report(back, ReportFormat::json) == text);
  }
  CHECK_THROWS_AS(result_from_json(ordered_json::parse(R"({"kind": 3})")), ParseError);
}

TEST_CASE("csv has one header row and one row per cell") {
  auto r = sweep(spec_with(R"({"sweep": {"theta": [0, 0.5, 1], "beta": [0.5, 1]}})"), catalog());
  auto rows = lines(emit_report(r, ReportFormat::csv));
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].rfind("theta,beta,payment_usd_per_month", 0) == 0);

  auto single = lines(emit_report(run(spec_with("{}"), catalog()), ReportFormat::csv));
  CHECK(single.size() == 2);
}

TEST_CASE("csv quotes awkward strings") {
  ScenarioResult r;
  r.kind = "sweep";
  r.table = ResultTable{{"name", "value", "flag", "missing"}, {{std::string("a,\"b\""), 1.5, true, std::monostate{}}}};
  CHECK(emit_report(r, ReportFormat::csv) == "name,value,flag,missing\n\"a,\"\"b\"\"\",1.5,true,\n");
}

TEST_CASE("markdown keeps the grid declaration order") {
  auto r = sweep(spec_with(R"({"sweep": {"theta": [0, 1], "beta": [0.5]}})"), catalog());
  const auto text = emit_report(r, ReportFormat::markdown);
  CHECK(text.find("| theta | beta | payment_usd_per_month |") != std::string::npos);
  CHECK(text.rfind("# report", 0) == 0);

  const auto md = emit_report(run(spec_with("{}"), catalog()), ReportFormat::markdown);
  CHECK(md.find("## Settlement") != std::string::npos);
  CHECK(md.find("## Per-service split") != std::string::npos);
}
