#include <thread>

#include <httplib.h>

#include "doctest.h"
#include "peerbargain/api_service.hpp"
#include "peerbargain/report.hpp"

using namespace peerbargain;
using nlohmann::ordered_json;

namespace {

const ApiService& service() {
  static const ApiService s(std::make_shared<const DatasetCatalog>(std::nullopt, false));
  return s;
}

ApiResponse post(const std::string& path, const std::string& body, const std::string& type = "application/json") {
  return service().handle({"POST", path, type, body});
}

ApiResponse get(const std::string& path) { return service().handle({"GET", path, "", ""}); }

const char* kSpec = R"({
  "schema_version": 1,
  "name": "api",
  "overrides": {"beta": 1.0, "theta": 1.0},
  "events": [{"isp": "comcast", "csp": "google", "services": ["video"]}]
})";

}  // namespace

TEST_CASE("health and datasets") {
  auto h = get("/healthz");
  CHECK(h.status == 200);
  CHECK(ordered_json::parse(h.body) == ordered_json{{"status", "ok"}});
  CHECK(get("/healthz").body == h.body);

  auto list = ordered_json::parse(get("/api/v1/datasets").body);
  CHECK(list[0] == "us2013");

  auto d = get("/api/v1/datasets/us2013");
  CHECK(d.status == 200);
  CHECK(d.body == dataset_to_json(builtin_us_dataset()).dump(2) + "\n");
  CHECK(ordered_json::parse(d.body)["isps"][0]["subscribers"] == 19025000.0);

  auto missing = get("/api/v1/datasets/nope");
  CHECK(missing.status == 404);
  CHECK(ordered_json::parse(missing.body)["code"] == "not_found");
  CHECK(get("/nowhere").status == 404);
}

TEST_CASE("scenario endpoints return the cli document") {
  auto r = post("/api/v1/scenarios:run", kSpec);
  CHECK(r.status == 200);
  const DatasetCatalog catalog;
  CHECK(r.body == emit_report(run(parse_scenario(kSpec, "x"), catalog), ReportFormat::json));

  auto doc = ordered_json::parse(kSpec);
  doc["sweep"] = {{"theta", {0, 0.2, 0.4, 0.6, 0.8, 1}}};
  auto s = post("/api/v1/sweeps", doc.dump());
  CHECK(s.status == 200);
  CHECK(ordered_json::parse(s.body)["table"]["rows"].size() == 6);

  CHECK(post("/api/v1/price-tables", kSpec).status == 200);
  doc = ordered_json::parse(kSpec);
  doc["compare"] = {{"isps", {"comcast", "cox"}}};
  CHECK(post("/api/v1/comparisons", doc.dump()).status == 200);
}

TEST_CASE("error mapping") {
  auto bad_json = post("/api/v1/scenarios:run", "{nope");
  CHECK(bad_json.status == 400);
  CHECK(ordered_json::parse(bad_json.body)["code"] == "bad_request");

  CHECK(post("/api/v1/scenarios:run", kSpec, "text/plain").status == 400);
  CHECK(post("/api/v1/scenarios:run", kSpec, "application/json; charset=utf-8").status == 200);

  auto doc = ordered_json::parse(kSpec);
  doc["overrides"]["beta"] = 1.5;
  auto invalid = post("/api/v1/scenarios:run", doc.dump());
  CHECK(invalid.status == 422);
  auto body = ordered_json::parse(invalid.body);
  CHECK(body["code"] == "validation_failed");
  CHECK(body["details"] == ordered_json{"overrides.beta"});

  doc = ordered_json::parse(kSpec);
  doc["extra"] = true;
  CHECK(post("/api/v1/scenarios:run", doc.dump()).status == 422);

  doc = ordered_json::parse(kSpec);
  doc["dataset"] = "/etc/passwd";
  CHECK(post("/api/v1/scenarios:run", doc.dump()).status == 422);

  std::string huge = std::string(kMaxRequestBytes + 1, ' ');
  CHECK(post("/api/v1/scenarios:run", huge).status == 422);

  doc = ordered_json::parse(kSpec);
  std::vector<double> grid(101, 0.5);
  doc["sweep"] = {{"beta", grid}, {"theta", grid}};
  CHECK(post("/api/v1/sweeps", doc.dump()).status == 422);

  CHECK(service().handle({"GET", "/api/v1/sweeps", "", ""}).status == 404);
  auto options = service().handle({"OPTIONS", "/api/v1/sweeps", "", ""});
  CHECK(options.status == 204);
  CHECK(options.headers.at("Access-Control-Allow-Origin") == "*");
}

TEST_CASE("server answers over http") {
  auto svc = std::make_shared<const ApiService>(std::make_shared<const DatasetCatalog>());
  ApiServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto r = client.Post("/api/v1/scenarios:run", kSpec, "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->body == svc->handle({"POST", "/api/v1/scenarios:run", "application/json", kSpec}).body);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");

  server.stop();
  t.join();
}
