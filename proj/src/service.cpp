#include "r0scope/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "r0scope/analytics.hpp"
#include "r0scope/error.hpp"
#include "r0scope/json_io.hpp"

namespace r0scope {

using nlohmann::json;

namespace {

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
  return {status, json{{"error", code}, {"message", message}}};
}

std::optional<std::string> param(const QueryParams& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

std::string required(const QueryParams& params, const std::string& name) {
  auto v = param(params, name);
  if (!v || trim(*v).empty()) throw Error(ErrorCode::InvalidParameter, "missing parameter " + name);
  return *v;
}

std::optional<double> decimal_param(const QueryParams& params, const std::string& name) {
  auto v = param(params, name);
  if (!v || trim(*v).empty()) return std::nullopt;
  auto d = parse_decimal(*v);
  if (!d) throw Error(ErrorCode::InvalidParameter, name + " is not a number");
  return d;
}

std::size_t count_param(const QueryParams& params, const std::string& name, std::size_t fallback) {
  auto v = param(params, name);
  if (!v || trim(*v).empty()) return fallback;
  if (!is_digits(trim(*v)) || trim(*v).size() > 9) throw Error(ErrorCode::InvalidParameter, name + " must be a positive integer");
  return static_cast<std::size_t>(std::stoul(std::string(trim(*v))));
}

std::string disease_param(const QueryParams& params, const std::string& name) {
  return canonical_disease(required(params, name));
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::StorageError:
    case ErrorCode::StoreUnavailable:
      return 503;
    default:
      return 400;
  }
}

}  // namespace

ApiServer::ApiServer(const Store& store, ApiConfig config, std::function<json()> status)
    : store_(store), config_(std::move(config)), status_(std::move(status)) {}

ApiServer::~ApiServer() { stop(); }

ApiResponse ApiServer::handle(const std::string& path, const QueryParams& params) const {
  try {
    if (path == "/api/health") {
      json body{{"status", "ok"}};
      auto wm = store_.watermark();
      body["watermark"] = wm ? json(format_timestamp(*wm)) : json(nullptr);
      if (status_) body.update(status_());
      return {200, body};
    }
    if (path == "/api/stats") {
      return {200, stats_snapshot(store_.snapshot())};
    }
    if (path == "/api/papers") {
      const auto page = count_param(params, "page", 1);
      const auto size = count_param(params, "size", 25);
      auto q = param(params, "q");
      auto result = store_.list_papers(page, size, q);
      json rows = json::array();
      for (const auto& p : result.rows) {
        json row = p;
        row["pubmed_url"] = pubmed_url(p.pmid);
        rows.push_back(std::move(row));
      }
      return {200, json{{"page", page}, {"size", size}, {"q", q ? json(*q) : json(nullptr)},
                        {"total", result.total}, {"rows", std::move(rows)}}};
    }
    if (path == "/api/rq1") {
      auto lo = decimal_param(params, "r0_min");
      auto hi = decimal_param(params, "r0_max");
      auto rows = rq1_max_r0(store_.snapshot(), lo, hi);
      return {200, json{{"r0_min", lo ? json(*lo) : json(nullptr)},
                        {"r0_max", hi ? json(*hi) : json(nullptr)},
                        {"rows", rows}}};
    }
    if (path == "/api/rq2" || path == "/api/rq3") {
      auto disease = disease_param(params, "disease");
      auto snap = store_.snapshot();
      json rows = path == "/api/rq2" ? json(rq2_studies_by_location(snap, disease))
                                     : json(rq3_r0_range_by_location(snap, disease));
      return {200, json{{"disease", disease}, {"rows", std::move(rows)}}};
    }
    if (path == "/api/rq4") {
      std::vector<std::string> diseases;
      if (auto raw = param(params, "diseases")) {
        for (auto part : split(*raw, ',')) {
          auto key = canonical_disease(part);
          if (!key.empty()) diseases.push_back(key);
        }
      }
      auto points = rq4_map_points(store_.snapshot(), diseases);
      std::vector<std::string> distinct;
      for (const auto& d : diseases) {
        if (std::find(distinct.begin(), distinct.end(), d) == distinct.end()) distinct.push_back(d);
      }
      return {200, json{{"diseases", distinct}, {"points", points}}};
    }
    if (path == "/api/drilldown") {
      DrilldownSelector sel;
      json rq_tag = nullptr;
      sel.disease_key = disease_param(params, "disease");
      if (auto c = param(params, "country"); c && !trim(*c).empty()) sel.country = std::string(trim(*c));
      if (auto rq = param(params, "rq"); rq && !trim(*rq).empty()) {
        sel.question = parse_research_question(*rq);
        if (!sel.question) throw Error(ErrorCode::InvalidParameter, "rq must be one of rq1..rq4");
        rq_tag = ascii_lower(trim(*rq));
      }
      auto papers = drilldown(store_.snapshot(), sel);
      return {200, json{{"disease", sel.disease_key},
                        {"country", sel.country ? json(*sel.country) : json(nullptr)},
                        {"rq", rq_tag},
                        {"papers", papers}}};
    }
    return error_response(404, "NotFound", "no route for " + path);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), error_code_name(e.code()), e.what());
  }
}

int ApiServer::bind() {
  server_ = std::make_unique<httplib::Server>();
  auto& srv = *server_;
  auto cors = config_.cors_origin;
  auto dispatch = [this, cors](const httplib::Request& req, httplib::Response& res) {
    QueryParams params(req.params.begin(), req.params.end());
    auto out = handle(req.path, params);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json; charset=utf-8");
    if (cors) res.set_header("Access-Control-Allow-Origin", *cors);
  };
  srv.Get(R"(/.*)", dispatch);
  srv.Options(R"(/.*)", [cors](const httplib::Request&, httplib::Response& res) {
    if (cors) {
      res.set_header("Access-Control-Allow-Origin", *cors);
      res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }
    res.status = 204;
  });
  auto not_found = [cors](const httplib::Request& req, httplib::Response& res) {
    res.status = 404;
    res.set_content(json{{"error", "NotFound"}, {"message", "no route for " + req.method + " " + req.path}}.dump(),
                    "application/json; charset=utf-8");
    if (cors) res.set_header("Access-Control-Allow-Origin", *cors);
  };
  srv.Post(R"(/.*)", not_found);
  srv.Put(R"(/.*)", not_found);
  srv.Delete(R"(/.*)", not_found);
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    spdlog::error("request failed: {}", msg);
    res.status = 500;
    res.set_content(json{{"error", "InternalError"}, {"message", msg}}.dump(), "application/json; charset=utf-8");
  });

  // No SO_REUSEPORT: a second server on an occupied port must fail, not share it.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });

  int port = config_.port;
  if (port == 0) {
    port = srv.bind_to_any_port(config_.host);
    if (port < 0) throw Error(ErrorCode::BindFailure, "cannot bind " + config_.host);
  } else if (!srv.bind_to_port(config_.host, port)) {
    throw Error(ErrorCode::BindFailure, "cannot bind " + config_.host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::listen() {
  if (!server_) throw Error(ErrorCode::BindFailure, "bind() must precede listen()");
  server_->listen_after_bind();
}

void ApiServer::stop() {
  if (server_) server_->stop();
}

}  // namespace r0scope
