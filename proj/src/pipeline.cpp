#include "r0scope/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <variant>

#include "r0scope/error.hpp"
#include "r0scope/normalize.hpp"

namespace r0scope {

std::optional<SourceKind> parse_source_kind(std::string_view s) {
  if (s == "csv-drop-directory" || s == "csv") return SourceKind::CsvDropDirectory;
  if (s == "pubmed-client" || s == "pubmed") return SourceKind::PubMed;
  return std::nullopt;
}

std::optional<ExtractorKind> parse_extractor_kind(std::string_view s) {
  if (s == "endpoint") return ExtractorKind::Endpoint;
  if (s == "rule-based" || s == "rules") return ExtractorKind::RuleBased;
  return std::nullopt;
}

std::chrono::seconds parse_duration(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw Error(ErrorCode::InvalidConfig, "empty duration");
  std::size_t digits = 0;
  while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits]))) ++digits;
  if (digits == 0) throw Error(ErrorCode::InvalidConfig, "duration must start with a number: " + std::string(text));
  long long n = std::stoll(std::string(text.substr(0, digits)));
  auto unit = text.substr(digits);
  if (unit.empty() || unit == "s") return std::chrono::seconds(n);
  if (unit == "m" || unit == "min") return std::chrono::minutes(n);
  if (unit == "h") return std::chrono::hours(n);
  if (unit == "d") return std::chrono::hours(24 * n);
  throw Error(ErrorCode::InvalidConfig, "unknown duration unit in " + std::string(text));
}

void SchedulerConfig::validate() const {
  if (interval < std::chrono::minutes(1)) throw Error(ErrorCode::InvalidConfig, "interval must be at least 1 minute");
  if (max_batch < 1) throw Error(ErrorCode::InvalidConfig, "max_batch must be at least 1");
}

void to_json(nlohmann::json& j, const PipelineRunReport& r) {
  j = nlohmann::json{{"started_at", format_timestamp(r.started_at)},
                     {"finished_at", format_timestamp(r.finished_at)},
                     {"papers_seen", r.papers_seen},
                     {"papers_new", r.papers_new},
                     {"summaries_new", r.summaries_new},
                     {"unanswerable_count", r.unanswerable_count},
                     {"error_count", r.error_count},
                     {"warnings", r.warnings}};
}

CsvDropSource::CsvDropSource(std::filesystem::path directory, ColumnMapping mapping)
    : directory_(std::move(directory)), mapping_(std::move(mapping)) {}

std::vector<PaperRecord> CsvDropSource::fetch(std::optional<Timestamp>, Timestamp now) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory_, ec)) {
    throw Error(ErrorCode::SourceUnavailable, "drop directory " + directory_.string() + " not found");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory_, ec)) {
    if (entry.is_regular_file() && ascii_lower(entry.path().extension().string()) == ".csv") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw Error(ErrorCode::SourceUnavailable, "cannot list " + directory_.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  row_errors_.clear();
  std::vector<PaperRecord> out;
  std::set<std::string, std::less<>> seen;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    CsvParseResult parsed;
    try {
      parsed = parse_pubmed_csv(buf.str(), mapping_, now);
    } catch (const Error& e) {
      row_errors_.push_back(file.filename().string() + ": " + e.what());
      continue;
    }
    for (const auto& err : parsed.errors) {
      row_errors_.push_back(file.filename().string() + ": row " + std::to_string(err.row) + ": " + err.reason);
    }
    for (auto& rec : parsed.records) {
      if (seen.insert(rec.pmid).second) out.push_back(std::move(rec));
    }
  }
  return out;
}

namespace {

struct Extracted {
  std::optional<ExtractorResponse> response;
  std::optional<std::string> error;
  bool unparseable = false;
};

Extracted extract_one(Extractor& extractor, const PaperRecord& paper) {
  Extracted out;
  try {
    out.response = extractor.extract(paper);
  } catch (const EndpointError& e) {
    out.error = e.what();
  } catch (const Error& e) {
    out.error = e.what();
    out.unparseable = e.code() == ErrorCode::Unparseable;
  }
  return out;
}

std::vector<Extracted> extract_all(Extractor& extractor, const std::vector<PaperRecord>& papers) {
  std::vector<Extracted> results(papers.size());
  const std::size_t workers = std::clamp<std::size_t>(extractor.concurrency(), 1, std::max<std::size_t>(1, papers.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < papers.size(); ++i) results[i] = extract_one(extractor, papers[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < papers.size(); i = next++) results[i] = extract_one(extractor, papers[i]);
    }));
  }
  for (auto& f : pool) f.get();
  return results;
}

}  // namespace

PipelineRunReport run_pipeline_once(const SchedulerConfig& config, PipelineContext& ctx) {
  config.validate();
  PipelineRunReport report;
  report.started_at = now_utc();

  std::optional<Timestamp> watermark;
  std::set<std::string, std::less<>> known;
  try {
    watermark = ctx.store.watermark();
    known = ctx.store.known_pmids();
  } catch (const Error& e) {
    throw Error(ErrorCode::StoreUnavailable, e.what());
  }

  auto acquired = ctx.source.fetch(watermark, report.started_at);
  report.papers_seen = acquired.size();
  auto fresh = dedup_against_store(acquired, known);
  UpsertBatch batch;
  batch.watermark = report.started_at;
  if (fresh.size() > config.max_batch) {
    // Leave the watermark where it was so the remainder is fetched again.
    report.warnings.push_back("batch limit " + std::to_string(config.max_batch) + " reached; " +
                              std::to_string(fresh.size() - config.max_batch) + " papers deferred");
    fresh.resize(config.max_batch);
    batch.watermark.reset();
  }
  report.papers_new = fresh.size();

  auto extracted = extract_all(ctx.extractor, fresh);

  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const auto& paper = fresh[i];
    auto& result = extracted[i];
    if (result.error) {
      ++report.error_count;
      report.warnings.push_back(*result.error);
      // Unreadable output is final for this model; transport failures are retried next run.
      if (result.unparseable) batch.processed.push_back({paper.pmid, PaperOutcome::Unparseable});
      continue;
    }
    if (!result.response->answerable()) {
      ++report.unanswerable_count;
      batch.processed.push_back({paper.pmid, PaperOutcome::Unanswerable});
      continue;
    }
    std::vector<StructuredSummary> summaries;
    for (const auto& raw : result.response->summaries) {
      try {
        summaries.push_back(normalize_summary(raw, ctx.gazetteer, &report.warnings));
      } catch (const NormalizationError& e) {
        report.warnings.push_back(e.what());
      }
    }
    if (summaries.empty()) {
      batch.processed.push_back({paper.pmid, PaperOutcome::NoValidSummary});
      continue;
    }
    batch.papers.push_back(paper);
    batch.summaries.insert(batch.summaries.end(), std::make_move_iterator(summaries.begin()),
                           std::make_move_iterator(summaries.end()));
  }

  UpsertReport upserted;
  try {
    upserted = ctx.store.upsert(batch);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IntegrityError) throw;
    throw Error(ErrorCode::StoreUnavailable, e.what());
  }
  report.summaries_new = upserted.summaries_new;
  report.finished_at = now_utc();
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  spdlog::info("pipeline run: seen={} new={} summaries_new={} unanswerable={} errors={}", report.papers_seen,
               report.papers_new, report.summaries_new, report.unanswerable_count, report.error_count);
  return report;
}

Scheduler::Scheduler(SchedulerConfig config, Job job) : config_(config), job_(std::move(job)) {
  config_.validate();
}

Scheduler::~Scheduler() { stop(); }

void Scheduler::start() {
  std::lock_guard lock(mutex_);
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] { loop(); });
}

void Scheduler::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::optional<PipelineRunReport> Scheduler::trigger() {
  bool expected = false;
  if (!running_.compare_exchange_strong(expected, true)) {
    ++skipped_;
    spdlog::info("pipeline run already in progress; skipping tick");
    return std::nullopt;
  }
  struct Reset {
    std::atomic<bool>& flag;
    ~Reset() { flag = false; }
  } reset{running_};
  auto report = job_();
  std::lock_guard lock(mutex_);
  last_ = report;
  return report;
}

std::optional<PipelineRunReport> Scheduler::last_report() const {
  std::lock_guard lock(mutex_);
  return last_;
}

void Scheduler::loop() {
  while (true) {
    try {
      trigger();
    } catch (const std::exception& e) {
      spdlog::error("pipeline run failed: {}", e.what());
    }
    std::unique_lock lock(mutex_);
    if (cv_.wait_for(lock, config_.interval, [this] { return stopping_; })) return;
  }
}

}  // namespace r0scope
