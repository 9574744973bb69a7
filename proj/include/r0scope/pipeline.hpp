#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "r0scope/endpoint.hpp"
#include "r0scope/gazetteer.hpp"
#include "r0scope/ingest.hpp"
#include "r0scope/pubmed.hpp"
#include "r0scope/store.hpp"

namespace r0scope {

enum class SourceKind { CsvDropDirectory, PubMed };
enum class ExtractorKind { Endpoint, RuleBased };

std::optional<SourceKind> parse_source_kind(std::string_view s);        // "csv-drop-directory" | "pubmed-client"
std::optional<ExtractorKind> parse_extractor_kind(std::string_view s);  // "endpoint" | "rule-based"

// "90s", "15m", "24h", "1d"; a bare number is seconds.
std::chrono::seconds parse_duration(std::string_view text);

struct SchedulerConfig {
  std::chrono::seconds interval{std::chrono::hours(24)};
  SourceKind source = SourceKind::CsvDropDirectory;
  ExtractorKind extractor = ExtractorKind::RuleBased;
  std::size_t max_batch = 500;

  // interval >= 1 minute and max_batch >= 1, else Error(InvalidConfig).
  void validate() const;
};

struct PipelineRunReport {
  Timestamp started_at{};
  Timestamp finished_at{};
  std::size_t papers_seen = 0;
  std::size_t papers_new = 0;
  std::size_t summaries_new = 0;
  std::size_t unanswerable_count = 0;
  std::size_t error_count = 0;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const PipelineRunReport& r);

class PaperSource {
 public:
  virtual ~PaperSource() = default;
  // Papers available since the watermark. Throws Error(SourceUnavailable).
  virtual std::vector<PaperRecord> fetch(std::optional<Timestamp> watermark, Timestamp now) = 0;
};

// Every *.csv file in a directory, in filename order; the first occurrence of
// a pmid wins. Row errors are kept for inspection.
class CsvDropSource final : public PaperSource {
 public:
  explicit CsvDropSource(std::filesystem::path directory, ColumnMapping mapping = {});
  std::vector<PaperRecord> fetch(std::optional<Timestamp> watermark, Timestamp now) override;
  const std::vector<std::string>& row_errors() const { return row_errors_; }

 private:
  std::filesystem::path directory_;
  ColumnMapping mapping_;
  std::vector<std::string> row_errors_;
};

class PubMedSource final : public PaperSource {
 public:
  explicit PubMedSource(PubMedConfig config = {}) : client_(std::move(config)) {}
  std::vector<PaperRecord> fetch(std::optional<Timestamp> watermark, Timestamp now) override {
    return client_.fetch_window(watermark, now);
  }

 private:
  PubMedClient client_;
};

struct PipelineContext {
  Store& store;
  PaperSource& source;
  Extractor& extractor;
  const Gazetteer& gazetteer;
};

// acquire -> dedup against the store -> extract -> drop unanswerable ->
// normalize -> one atomic upsert that also advances the watermark (unless
// max_batch deferred some papers).
PipelineRunReport run_pipeline_once(const SchedulerConfig& config, PipelineContext& ctx);

// Runs a job every interval on a background thread. At most one run at a
// time; a tick that finds a run in progress is skipped.
class Scheduler {
 public:
  using Job = std::function<PipelineRunReport()>;

  Scheduler(SchedulerConfig config, Job job);
  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;
  ~Scheduler();

  void start();
  void stop();

  // Runs the job now on the calling thread; returns nullopt when skipped
  // because another run is in progress.
  std::optional<PipelineRunReport> trigger();

  bool running() const { return running_.load(); }
  std::size_t skipped_ticks() const { return skipped_.load(); }
  std::optional<PipelineRunReport> last_report() const;

 private:
  void loop();

  SchedulerConfig config_;
  Job job_;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> skipped_{0};
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::optional<PipelineRunReport> last_;
  std::thread thread_;
};

}  // namespace r0scope
