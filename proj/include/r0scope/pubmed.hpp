#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "r0scope/ingest.hpp"

namespace r0scope {

// Spaces calls at least 1/rate seconds apart across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void acquire();

 private:
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_{};
  std::mutex mutex_;
};

struct PubMedConfig {
  std::string base_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
  std::optional<std::string> api_key;
  std::optional<std::string> email;
  std::string tool = "r0scope";
  double requests_per_second = 3.0;  // NCBI allows 3/s without a key
  std::size_t max_results = 500;
  std::size_t fetch_chunk = 200;
  std::chrono::milliseconds timeout{30000};
};

// PubmedArticleSet XML (efetch, retmode=xml) to records. Articles without a
// PMID or title are skipped.
std::vector<PaperRecord> parse_efetch_xml(std::string_view xml, Timestamp fetched_at = now_utc());

// Reads the id list of an esearch JSON response.
std::vector<std::string> parse_esearch_json(std::string_view body);

// Optional live source: E-utilities esearch followed by efetch.
class PubMedClient {
 public:
  explicit PubMedClient(PubMedConfig config = {});

  std::vector<std::string> search(const std::string& term);
  std::vector<PaperRecord> fetch(const std::vector<std::string>& pmids);

  // Articles matching the standard query entered between `since` (or the
  // beginning of time) and `until`.
  std::vector<PaperRecord> fetch_window(std::optional<Timestamp> since, Timestamp until);

 private:
  std::string get(const std::string& path, const std::string& query);

  PubMedConfig config_;
  RateLimiter limiter_;
};

std::string format_query_date(Timestamp t);  // YYYY/MM/DD

}  // namespace r0scope
