#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "r0scope/extraction.hpp"

namespace r0scope {

// Where and how to reach the text-generation endpoint.
struct EndpointConfig {
  std::string url;  // e.g. http://localhost:8080/generate
  std::optional<std::string> token;
  std::chrono::milliseconds timeout{30000};
  int retry_budget = 3;  // retries after the first attempt
  std::chrono::milliseconds backoff{500};  // doubles after each failed attempt
  std::size_t max_in_flight = 4;

  // R0SCOPE_ENDPOINT_URL, R0SCOPE_ENDPOINT_TOKEN, R0SCOPE_ENDPOINT_TIMEOUT_MS,
  // R0SCOPE_ENDPOINT_RETRIES, R0SCOPE_ENDPOINT_CONCURRENCY override `base`.
  static EndpointConfig from_env(EndpointConfig base);
  static EndpointConfig from_env();
};

struct ParsedUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/generate", never empty
};

ParsedUrl parse_url(std::string_view url);

// First string found in a depth-first walk of the response body, in document
// order; the body itself when it is not JSON.
std::string completion_text(std::string_view body);

// POSTs {"inputs": prompt}. Transport failures and 5xx responses are retried
// with exponential backoff; 4xx responses are not. Bounds concurrent calls.
class EndpointClient {
 public:
  explicit EndpointClient(EndpointConfig config);

  std::string query(const std::string& prompt);

  const EndpointConfig& config() const { return config_; }

 private:
  EndpointConfig config_;
  ParsedUrl url_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

std::string query_endpoint(const std::string& prompt, const EndpointConfig& config);

class Extractor {
 public:
  virtual ~Extractor() = default;
  // Throws EndpointError for transport failures and Error(Unparseable) for
  // unreadable model output.
  virtual ExtractorResponse extract(const PaperRecord& paper) = 0;
  // Papers that may be extracted in parallel.
  virtual std::size_t concurrency() const { return 1; }
};

class RuleBasedExtractor final : public Extractor {
 public:
  explicit RuleBasedExtractor(const Gazetteer* gazetteer = nullptr) : rules_(gazetteer) {}
  ExtractorResponse extract(const PaperRecord& paper) override { return rules_.extract(paper); }

 private:
  RuleExtractor rules_;
};

class EndpointExtractor final : public Extractor {
 public:
  explicit EndpointExtractor(EndpointConfig config) : client_(std::move(config)) {}
  ExtractorResponse extract(const PaperRecord& paper) override;
  std::size_t concurrency() const override { return client_.config().max_in_flight; }

 private:
  EndpointClient client_;
};

// Replays recorded model output keyed by pmid. Papers without a recorded
// response are treated as unanswerable.
class RecordedResponseExtractor final : public Extractor {
 public:
  explicit RecordedResponseExtractor(std::map<std::string, std::string> responses)
      : responses_(std::move(responses)) {}
  ExtractorResponse extract(const PaperRecord& paper) override;

 private:
  std::map<std::string, std::string> responses_;
};

}  // namespace r0scope
