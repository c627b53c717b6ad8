#include "peerbargain/api_service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "json_util.hpp"
#include "peerbargain/report.hpp"
#include "peerbargain/scenario.hpp"

namespace peerbargain {

namespace {

const std::map<std::string, std::string> kCorsHeaders = {
    {"Access-Control-Allow-Origin", "*"},
    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
    {"Access-Control-Allow-Headers", "Content-Type"},
};

const std::map<std::string, std::string, std::less<>> kScenarioRoutes = {
    {"/api/v1/scenarios:run", "run"},
    {"/api/v1/sweeps", "sweep"},
    {"/api/v1/price-tables", "price-table"},
    {"/api/v1/timing", "timing"},
    {"/api/v1/comparisons", "compare"},
};

constexpr std::string_view kDatasetPrefix = "/api/v1/datasets/";

ApiResponse json_response(int status, const nlohmann::ordered_json& body) {
  ApiResponse r;
  r.status = status;
  r.body = body.dump(2) + "\n";
  r.headers = kCorsHeaders;
  return r;
}

ApiResponse error_response(int status, std::string_view code, const std::string& message,
                           const std::vector<std::string>& details = {}) {
  nlohmann::ordered_json body;
  body["code"] = code;
  body["message"] = message;
  body["details"] = details;
  return json_response(status, body);
}

ApiResponse validation_response(const std::vector<Violation>& violations) {
  std::vector<std::string> paths;
  std::string message;
  for (const auto& v : violations) {
    paths.push_back(v.path);
    message += (message.empty() ? "" : "; ") + v.path + ": " + v.message;
  }
  return error_response(422, "validation_failed", message, paths);
}

bool is_json_content(std::string_view content_type) {
  const auto semicolon = content_type.find(';');
  std::string base(content_type.substr(0, semicolon));
  while (!base.empty() && base.back() == ' ') base.pop_back();
  std::transform(base.begin(), base.end(), base.begin(), [](unsigned char c) { return std::tolower(c); });
  return base == "application/json";
}

}  // namespace

ApiService::ApiService(std::shared_ptr<const DatasetCatalog> catalog) : catalog_(std::move(catalog)) {}

ApiResponse ApiService::handle(const ApiRequest& request) const {
  try {
    if (request.method == "OPTIONS") {
      ApiResponse r;
      r.status = 204;
      r.headers = kCorsHeaders;
      return r;
    }
    if (request.method == "GET" && request.path == "/healthz") return json_response(200, {{"status", "ok"}});
    if (request.method == "GET" && request.path == "/api/v1/datasets") return json_response(200, catalog_->list());
    if (request.method == "GET" && request.path.starts_with(kDatasetPrefix)) {
      const std::string id = request.path.substr(kDatasetPrefix.size());
      if (id.empty() || id.find('/') != std::string::npos || !catalog_->contains(id))
        return error_response(404, "not_found", "unknown dataset '" + id + "'");
      return json_response(200, dataset_to_json(*catalog_->get(id)));
    }

    auto route = kScenarioRoutes.find(request.path);
    if (route == kScenarioRoutes.end() || request.method != "POST")
      return error_response(404, "not_found", "no route for " + request.method + " " + request.path);

    if (request.body.size() > kMaxRequestBytes)
      return error_response(422, "validation_failed",
                            "request body exceeds " + std::to_string(kMaxRequestBytes) + " bytes");
    if (!is_json_content(request.content_type))
      return error_response(400, "bad_request", "content type must be application/json");

    const ScenarioSpec spec = parse_scenario(request.body, "request");
    const ScenarioResult result = run_command(route->second, spec, *catalog_);
    ApiResponse r;
    r.body = emit_report(result, ReportFormat::json);
    r.headers = kCorsHeaders;
    return r;
  } catch (const ValidationError& e) {
    return validation_response(e.violations());
  } catch (const ParseError& e) {
    if (e.field().empty()) return error_response(400, "bad_request", e.what());
    return error_response(422, "validation_failed", e.what(), {e.field()});
  } catch (const ModelError& e) {
    return error_response(422, "validation_failed", e.what());
  } catch (const std::exception& e) {
    spdlog::error("internal error on {} {}: {}", request.method, request.path, e.what());
    return error_response(500, "internal", "internal error");
  }
}

struct ApiServer::Impl {
  std::shared_ptr<const ApiService> service;
  httplib::Server server;
};

ApiServer::ApiServer(std::shared_ptr<const ApiService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& server = impl_->server;
  // Oversized bodies get a proper ApiError from the service instead of a bare 413.
  server.set_payload_max_length(4 * kMaxRequestBytes);
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request{req.method, req.path, req.get_header_value("Content-Type"), req.body};
    const ApiResponse response = impl_->service->handle(request);
    res.status = response.status;
    for (const auto& [k, v] : response.headers) res.set_header(k, v);
    if (!response.body.empty()) res.set_content(response.body, response.content_type);
    spdlog::info("{} {} -> {}", req.method, req.path, response.status);
  };
  const std::string any = R"(/.*)";
  server.Get(any, handler);
  server.Post(any, handler);
  server.Put(any, handler);
  server.Delete(any, handler);
  server.Options(any, handler);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void ApiServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace peerbargain
