#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>

#include "peerbargain/dataset.hpp"

namespace peerbargain {

inline constexpr std::size_t kMaxRequestBytes = 1 << 20;

struct ApiRequest {
  std::string method;
  std::string path;
  std::string content_type;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Request handling without any transport: every response is a pure
/// function of the request and the (immutable) dataset catalog.
class ApiService {
 public:
  explicit ApiService(std::shared_ptr<const DatasetCatalog> catalog);

  ApiResponse handle(const ApiRequest& request) const;

 private:
  std::shared_ptr<const DatasetCatalog> catalog_;
};

/// HTTP/1.1 listener in front of an ApiService.
class ApiServer {
 public:
  explicit ApiServer(std::shared_ptr<const ApiService> service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, throws on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void listen();
  /// Returns once listen() accepts connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace peerbargain
