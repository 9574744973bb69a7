#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "r0scope/ingest.hpp"
#include "r0scope/normalize.hpp"

struct sqlite3;

namespace r0scope {

// Summary identity within a paper: SHA-256 over the six normalized
// properties (disease key, raw location, raw date, R0 bounds, CI, method).
std::string content_hash(const StructuredSummary& summary);

struct StoredSummary {
  std::string content_hash;
  StructuredSummary summary;

  bool operator==(const StoredSummary&) const = default;
};

struct UpsertReport {
  std::size_t papers_new = 0;
  std::size_t papers_existing = 0;
  std::size_t summaries_new = 0;
  std::size_t summaries_existing = 0;

  bool operator==(const UpsertReport&) const = default;
};

// Outcome recorded for a paper that yielded no summaries, so later runs do
// not extract it again.
enum class PaperOutcome { Unanswerable, Unparseable, NoValidSummary };

std::string_view outcome_name(PaperOutcome outcome);

struct ProcessedPaper {
  std::string pmid;
  PaperOutcome outcome = PaperOutcome::Unanswerable;
};

// Everything one pipeline run writes. Applied in a single transaction.
struct UpsertBatch {
  std::vector<PaperRecord> papers;
  std::vector<StructuredSummary> summaries;
  std::vector<ProcessedPaper> processed;
  std::optional<Timestamp> watermark;
};

struct SummaryFilter {
  std::optional<std::string> disease_key;
  std::optional<std::string> country;
  std::optional<double> r0_max_lo;  // inclusive bounds on r0_max
  std::optional<double> r0_max_hi;
  std::optional<std::set<std::string>> pmids;
};

struct PaperPage {
  std::vector<PaperRecord> rows;
  std::size_t total = 0;
};

// Consistent read of the whole store, taken inside one read transaction.
struct StoreSnapshot {
  std::vector<PaperRecord> papers;  // pub_year desc, then pmid
  std::vector<StoredSummary> summaries;  // pmid asc, then content hash
};

// Embedded single-file store (SQLite, WAL mode). One writer at a time;
// readers see either the state before or after a batch, never a partial one.
class Store {
 public:
  static Store open(const std::string& path);

  Store(Store&&) noexcept;
  Store& operator=(Store&&) noexcept;
  ~Store();

  UpsertReport upsert_batch(const std::vector<PaperRecord>& papers,
                            const std::vector<StructuredSummary>& summaries);
  UpsertReport upsert(const UpsertBatch& batch);

  std::vector<StoredSummary> query_summaries(const SummaryFilter& filter = {}) const;
  PaperPage list_papers(std::size_t page, std::size_t page_size,
                        const std::optional<std::string>& keyword = std::nullopt) const;
  std::optional<PaperRecord> find_paper(const std::string& pmid) const;

  // Paper and processed-paper ids: everything the pipeline has already seen.
  std::set<std::string, std::less<>> known_pmids() const;
  std::vector<ProcessedPaper> processed_papers() const;

  std::optional<Timestamp> watermark() const;
  StoreSnapshot snapshot() const;

  // Hash over papers, summaries and processed outcomes (not the watermark).
  std::string state_hash() const;

  const std::string& path() const { return path_; }

 private:
  struct Connection;
  explicit Store(std::string path);

  std::unique_ptr<Connection> acquire_reader() const;
  void release_reader(std::unique_ptr<Connection> conn) const;

  template <typename F>
  auto with_reader(F&& f) const;

  std::string path_;
  std::unique_ptr<Connection> writer_;
  std::unique_ptr<std::mutex> write_mutex_;
  std::unique_ptr<std::mutex> pool_mutex_;
  mutable std::vector<std::unique_ptr<Connection>> readers_;
};

}  // namespace r0scope
