#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "r0scope/store.hpp"

namespace httplib {
class Server;
}

namespace r0scope {

struct ApiConfig {
  std::string host = "0.0.0.0";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> cors_origin;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

using QueryParams = std::multimap<std::string, std::string>;

// Read-only JSON API over a store. Every body is a projection of the matching
// analytics call; errors carry {"error": <code>, "message": <text>}.
//
//   GET /api/health
//   GET /api/stats
//   GET /api/papers?page&size&q
//   GET /api/rq1?r0_min&r0_max
//   GET /api/rq2?disease
//   GET /api/rq3?disease
//   GET /api/rq4?diseases=a,b,c
//   GET /api/drilldown?disease[&country][&rq]
class ApiServer {
 public:
  // `status` contributes extra fields to /api/health (e.g. scheduler state).
  ApiServer(const Store& store, ApiConfig config, std::function<nlohmann::json()> status = {});
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;
  ~ApiServer();

  // Dispatches without a socket; used by the HTTP handlers and by tests.
  ApiResponse handle(const std::string& path, const QueryParams& params) const;

  // Binds the configured port and returns the bound port. Throws
  // Error(BindFailure).
  int bind();
  // Serves until stop(); bind() first.
  void listen();
  void stop();

 private:
  const Store& store_;
  ApiConfig config_;
  std::function<nlohmann::json()> status_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace r0scope
