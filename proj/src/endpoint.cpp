#include "r0scope/endpoint.hpp"

#include <httplib.h>

#include <cstdlib>
#include <nlohmann/json.hpp>
#include <thread>

#include "r0scope/error.hpp"

namespace r0scope {

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

long env_number(const char* name, long fallback) {
  auto v = env(name);
  if (!v) return fallback;
  try {
    return std::stol(*v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " is not a number");
  }
}

const std::string* first_string(const nlohmann::ordered_json& j) {
  if (j.is_string()) return j.get_ptr<const std::string*>();
  if (j.is_array() || j.is_object()) {
    for (const auto& v : j) {
      if (const auto* s = first_string(v)) return s;
    }
  }
  return nullptr;
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

}  // namespace

EndpointConfig EndpointConfig::from_env() { return from_env(EndpointConfig{}); }

EndpointConfig EndpointConfig::from_env(EndpointConfig base) {
  if (auto v = env("R0SCOPE_ENDPOINT_URL")) base.url = *v;
  if (auto v = env("R0SCOPE_ENDPOINT_TOKEN")) base.token = *v;
  base.timeout = std::chrono::milliseconds(env_number("R0SCOPE_ENDPOINT_TIMEOUT_MS", base.timeout.count()));
  base.retry_budget = static_cast<int>(env_number("R0SCOPE_ENDPOINT_RETRIES", base.retry_budget));
  base.max_in_flight =
      static_cast<std::size_t>(env_number("R0SCOPE_ENDPOINT_CONCURRENCY", static_cast<long>(base.max_in_flight)));
  return base;
}

ParsedUrl parse_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::InvalidConfig, "URL needs a scheme: " + std::string(url));
  }
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string_view::npos) {
    out.scheme_host_port = std::string(url);
    out.path = "/";
  } else {
    out.scheme_host_port = std::string(url.substr(0, path_start));
    out.path = std::string(url.substr(path_start));
  }
  return out;
}

std::string completion_text(std::string_view body) {
  auto parsed = nlohmann::ordered_json::parse(body, nullptr, false);
  if (parsed.is_discarded()) return std::string(body);
  if (const auto* s = first_string(parsed)) return *s;
  return parsed.dump();
}

EndpointClient::EndpointClient(EndpointConfig config)
    : config_(std::move(config)),
      url_(parse_url(config_.url)),
      slots_(std::make_unique<std::counting_semaphore<1024>>(
          static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 1024)))) {
  if (config_.retry_budget < 0) throw Error(ErrorCode::InvalidConfig, "retry budget must be >= 0");
}

std::string EndpointClient::query(const std::string& prompt) {
  SlotGuard slot(*slots_);
  const std::string body = nlohmann::json{{"inputs", prompt}}.dump();

  auto delay = config_.backoff;
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(url_.scheme_host_port);
    auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    httplib::Headers headers;
    if (config_.token) headers.emplace("Authorization", "Bearer " + *config_.token);

    auto res = client.Post(url_.path, headers, body, "application/json");
    std::optional<EndpointError> failure;
    if (!res) {
      auto err = res.error();
      bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                       err == httplib::Error::Write;
      failure.emplace(timed_out ? ErrorCode::Timeout : ErrorCode::EndpointUnreachable,
                      config_.url + ": " + httplib::to_string(err));
    } else if (res->status >= 200 && res->status < 300) {
      return completion_text(res->body);
    } else if (res->status >= 400 && res->status < 500) {
      throw EndpointError(ErrorCode::EndpointRejected, config_.url + " answered " + std::to_string(res->status),
                          res->status);
    } else {
      failure.emplace(ErrorCode::EndpointRejected, config_.url + " answered " + std::to_string(res->status),
                      res->status);
    }
    if (attempt >= config_.retry_budget) throw *failure;
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

std::string query_endpoint(const std::string& prompt, const EndpointConfig& config) {
  return EndpointClient(config).query(prompt);
}

ExtractorResponse EndpointExtractor::extract(const PaperRecord& paper) {
  try {
    return parse_response(paper.pmid, client_.query(build_prompt(paper)));
  } catch (EndpointError& e) {
    e.set_pmid(paper.pmid);
    throw;
  }
}

ExtractorResponse RecordedResponseExtractor::extract(const PaperRecord& paper) {
  auto it = responses_.find(paper.pmid);
  if (it == responses_.end()) return parse_response(paper.pmid, "unanswerable");
  return parse_response(paper.pmid, it->second);
}

}  // namespace r0scope
