// Command-line front end: ingest, extract, normalize, dump/load, serve,
// schedule and one-off pipeline runs. R0SCOPE_* environment variables
// override the matching flags.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "r0scope/endpoint.hpp"
#include "r0scope/error.hpp"
#include "r0scope/json_io.hpp"
#include "r0scope/pipeline.hpp"
#include "r0scope/service.hpp"

#ifndef R0SCOPE_DEFAULT_GAZETTEER
#define R0SCOPE_DEFAULT_GAZETTEER "data/gazetteer.tsv"
#endif

namespace {

using namespace r0scope;
using nlohmann::json;

void env_override(std::string& value, const char* name) {
  if (const char* v = std::getenv(name); v && *v) value = v;
}

template <typename T>
void env_override_number(T& value, const char* name) {
  if (const char* v = std::getenv(name); v && *v) {
    try {
      value = static_cast<T>(std::stoll(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, std::string(name) + " is not a number");
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to the named file, or stdout when the name is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(ErrorCode::StorageError, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

struct PipelineOptions {
  std::string store;
  std::string source = "csv-drop-directory";
  std::string extractor = "rule-based";
  std::string drop_dir = "drop";
  std::string mapping;
  std::string gazetteer = R0SCOPE_DEFAULT_GAZETTEER;
  std::string endpoint;
  std::string token;
  std::string interval = "24h";
  std::size_t max_batch = 500;
  std::size_t concurrency = 4;
  std::string pubmed_api_key;
  std::string pubmed_email;

  void add_to(CLI::App* app, bool with_interval) {
    app->add_option("--store", store, "Store file")->required(std::getenv("R0SCOPE_STORE") == nullptr);
    app->add_option("--source", source, "csv-drop-directory | pubmed-client");
    app->add_option("--extractor", extractor, "endpoint | rule-based");
    app->add_option("--drop-dir", drop_dir, "Directory scanned for PubMed CSV exports");
    app->add_option("--mapping", mapping, "Column mapping JSON for the CSV exports");
    app->add_option("--gazetteer", gazetteer, "Gazetteer TSV");
    app->add_option("--endpoint", endpoint, "Inference endpoint URL");
    app->add_option("--token", token, "Inference endpoint bearer token");
    app->add_option("--max-batch", max_batch, "New papers processed per run");
    app->add_option("--concurrency", concurrency, "Concurrent endpoint requests");
    app->add_option("--pubmed-api-key", pubmed_api_key, "NCBI API key");
    app->add_option("--pubmed-email", pubmed_email, "Contact e-mail sent to NCBI");
    if (with_interval) app->add_option("--interval", interval, "Run interval, e.g. 30m, 24h");
  }

  void apply_env() {
    env_override(store, "R0SCOPE_STORE");
    env_override(source, "R0SCOPE_SOURCE");
    env_override(extractor, "R0SCOPE_EXTRACTOR");
    env_override(drop_dir, "R0SCOPE_DROP_DIR");
    env_override(mapping, "R0SCOPE_MAPPING");
    env_override(gazetteer, "R0SCOPE_GAZETTEER");
    env_override(endpoint, "R0SCOPE_ENDPOINT_URL");
    env_override(token, "R0SCOPE_ENDPOINT_TOKEN");
    env_override(interval, "R0SCOPE_INTERVAL");
    env_override_number(max_batch, "R0SCOPE_MAX_BATCH");
    env_override_number(concurrency, "R0SCOPE_ENDPOINT_CONCURRENCY");
    env_override(pubmed_api_key, "R0SCOPE_PUBMED_API_KEY");
    env_override(pubmed_email, "R0SCOPE_PUBMED_EMAIL");
  }

  SchedulerConfig scheduler_config() const {
    SchedulerConfig cfg;
    auto src = parse_source_kind(source);
    auto ext = parse_extractor_kind(extractor);
    if (!src) throw Error(ErrorCode::InvalidConfig, "unknown source " + source);
    if (!ext) throw Error(ErrorCode::InvalidConfig, "unknown extractor " + extractor);
    cfg.source = *src;
    cfg.extractor = *ext;
    cfg.interval = parse_duration(interval);
    cfg.max_batch = max_batch;
    return cfg;
  }
};

// Owns everything a pipeline run needs.
struct PipelineRig {
  Store store;
  Gazetteer gazetteer;
  std::unique_ptr<PaperSource> source;
  std::unique_ptr<Extractor> extractor;
  SchedulerConfig config;

  static std::unique_ptr<PipelineRig> build(const PipelineOptions& opts) {
    auto cfg = opts.scheduler_config();
    auto rig = std::unique_ptr<PipelineRig>(new PipelineRig{Store::open(opts.store),
                                                            Gazetteer::load_file(opts.gazetteer), nullptr,
                                                            nullptr, cfg});
    if (cfg.source == SourceKind::CsvDropDirectory) {
      ColumnMapping mapping = opts.mapping.empty() ? ColumnMapping{} : ColumnMapping::from_json_file(opts.mapping);
      rig->source = std::make_unique<CsvDropSource>(opts.drop_dir, mapping);
    } else {
      PubMedConfig pm;
      if (!opts.pubmed_api_key.empty()) pm.api_key = opts.pubmed_api_key;
      if (!opts.pubmed_email.empty()) pm.email = opts.pubmed_email;
      rig->source = std::make_unique<PubMedSource>(pm);
    }
    if (cfg.extractor == ExtractorKind::Endpoint) {
      EndpointConfig ec = EndpointConfig::from_env();
      if (!opts.endpoint.empty()) ec.url = opts.endpoint;
      if (!opts.token.empty()) ec.token = opts.token;
      ec.max_in_flight = opts.concurrency;
      if (ec.url.empty()) throw Error(ErrorCode::InvalidConfig, "--endpoint is required for the endpoint extractor");
      rig->extractor = std::make_unique<EndpointExtractor>(ec);
    } else {
      rig->extractor = std::make_unique<RuleBasedExtractor>(&rig->gazetteer);
    }
    return rig;
  }

  PipelineRunReport run() {
    PipelineContext ctx{store, *source, *extractor, gazetteer};
    return run_pipeline_once(config, ctx);
  }
};

int cmd_ingest(const std::string& csv, const std::string& mapping_path, const std::string& out_path) {
  ColumnMapping mapping = mapping_path.empty() ? ColumnMapping{} : ColumnMapping::from_json_file(mapping_path);
  auto result = parse_pubmed_csv(read_file(csv), mapping);
  Output out(out_path);
  for (const auto& rec : result.records) out.stream() << json(rec).dump() << '\n';
  for (const auto& err : result.errors) std::cerr << json(err).dump() << '\n';
  spdlog::info("ingest: {} records, {} row errors", result.records.size(), result.errors.size());
  return 0;
}

int cmd_extract(const std::string& in_path, const std::string& endpoint, const std::string& token,
                bool rule_based, const std::string& gazetteer_path, std::size_t concurrency,
                const std::string& out_path) {
  std::vector<PaperRecord> papers;
  for (const auto& j : read_ndjson(read_file(in_path))) papers.push_back(j.get<PaperRecord>());

  Gazetteer gazetteer;
  std::unique_ptr<Extractor> extractor;
  if (rule_based) {
    if (!gazetteer_path.empty()) gazetteer = Gazetteer::load_file(gazetteer_path);
    extractor = std::make_unique<RuleBasedExtractor>(gazetteer.size() ? &gazetteer : nullptr);
  } else {
    EndpointConfig ec = EndpointConfig::from_env();
    if (!endpoint.empty()) ec.url = endpoint;
    if (!token.empty()) ec.token = token;
    ec.max_in_flight = concurrency;
    if (ec.url.empty()) throw Error(ErrorCode::InvalidConfig, "give --endpoint <url> or --rule-based");
    extractor = std::make_unique<EndpointExtractor>(ec);
  }

  std::vector<std::optional<json>> lines(papers.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < papers.size(); i = next++) {
      try {
        lines[i] = json(extractor->extract(papers[i]));
      } catch (const Error& e) {
        std::lock_guard lock(err_mutex);
        std::cerr << json{{"pmid", papers[i].pmid}, {"error", error_code_name(e.code())}, {"message", e.what()}}.dump()
                  << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::max<std::size_t>(1, extractor->concurrency()); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  Output out(out_path);
  for (const auto& line : lines) {
    if (line) out.stream() << line->dump() << '\n';
  }
  return 0;
}

int cmd_normalize(const std::string& in_path, const std::string& gazetteer_path, const std::string& out_path) {
  auto gazetteer = Gazetteer::load_file(gazetteer_path);
  Output out(out_path);
  for (const auto& j : read_ndjson(read_file(in_path))) {
    auto resp = j.get<ExtractorResponse>();
    for (const auto& raw : resp.summaries) {
      std::vector<std::string> warnings;
      try {
        out.stream() << json(normalize_summary(raw, gazetteer, &warnings)).dump() << '\n';
      } catch (const NormalizationError& e) {
        warnings.push_back(e.what());
      }
      for (const auto& w : warnings) std::cerr << w << '\n';
    }
  }
  return 0;
}

int cmd_dump(const std::string& store_path, const std::string& papers_path, const std::string& summaries_path) {
  auto store = Store::open(store_path);
  auto snap = store.snapshot();
  {
    Output out(papers_path);
    for (const auto& p : snap.papers) out.stream() << json(p).dump() << '\n';
  }
  if (!summaries_path.empty()) {
    Output out(summaries_path);
    for (const auto& s : snap.summaries) out.stream() << json(s.summary).dump() << '\n';
  }
  return 0;
}

int cmd_load(const std::string& store_path, const std::string& papers_path, const std::string& summaries_path) {
  auto store = Store::open(store_path);
  UpsertBatch batch;
  for (const auto& j : read_ndjson(read_file(papers_path))) batch.papers.push_back(j.get<PaperRecord>());
  if (!summaries_path.empty()) {
    for (const auto& j : read_ndjson(read_file(summaries_path))) batch.summaries.push_back(j.get<StructuredSummary>());
  }
  std::cout << json(store.upsert(batch)).dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // stdout carries command output; logs go to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("r0scope"));
  CLI::App app{"r0scope: structured R0 estimates from PubMed abstracts"};
  app.require_subcommand(1);

  std::string csv, mapping, out;
  auto* ingest = app.add_subcommand("ingest", "Parse a PubMed CSV export into newline-delimited records");
  ingest->add_option("--csv", csv, "CSV export")->required();
  ingest->add_option("--mapping", mapping, "Column mapping JSON");
  ingest->add_option("--out", out, "Output file (default stdout)");

  std::string in, endpoint, token, gazetteer_path;
  bool rule_based = false;
  std::size_t concurrency = 4;
  auto* extract = app.add_subcommand("extract", "Extract six-property summaries from records");
  extract->add_option("--in", in, "Newline-delimited records")->required();
  auto* endpoint_opt = extract->add_option("--endpoint", endpoint, "Inference endpoint URL");
  auto* rules_opt = extract->add_flag("--rule-based", rule_based, "Use the offline pattern extractor");
  endpoint_opt->excludes(rules_opt);
  extract->add_option("--token", token, "Bearer token");
  extract->add_option("--gazetteer", gazetteer_path, "Gazetteer TSV for location names (rule-based)");
  extract->add_option("--concurrency", concurrency, "Concurrent requests");
  extract->add_option("--out", out, "Output file (default stdout)");

  std::string norm_gazetteer = R0SCOPE_DEFAULT_GAZETTEER;
  auto* normalize = app.add_subcommand("normalize", "Normalize extractor responses into structured summaries");
  normalize->add_option("--in", in, "Newline-delimited extractor responses")->required();
  normalize->add_option("--gazetteer", norm_gazetteer, "Gazetteer TSV");
  normalize->add_option("--out", out, "Output file (default stdout)");

  std::string store_path, papers_path, summaries_path;
  auto* dump = app.add_subcommand("dump", "Write store contents as newline-delimited JSON");
  const bool store_in_env = std::getenv("R0SCOPE_STORE") != nullptr;
  dump->add_option("--store", store_path, "Store file")->required(!store_in_env);
  dump->add_option("--papers", papers_path, "Papers output (default stdout)");
  dump->add_option("--summaries", summaries_path, "Summaries output");

  auto* load = app.add_subcommand("load", "Upsert newline-delimited papers and summaries into a store");
  load->add_option("--store", store_path, "Store file")->required(!store_in_env);
  load->add_option("--papers", papers_path, "Papers file")->required();
  load->add_option("--summaries", summaries_path, "Summaries file");

  ApiConfig api;
  std::string cors_origin;
  std::string serve_store;
  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  serve->add_option("--port", api.port, "Port");
  serve->add_option("--host", api.host, "Bind address");
  serve->add_option("--store", serve_store, "Store file")->required(std::getenv("R0SCOPE_STORE") == nullptr);
  serve->add_option("--cors-origin", cors_origin, "Allowed dashboard origin");

  PipelineOptions sched_opts;
  auto* schedule = app.add_subcommand("schedule", "Run the pipeline periodically");
  sched_opts.add_to(schedule, true);

  PipelineOptions once_opts;
  auto* pipeline = app.add_subcommand("pipeline", "Manual pipeline control");
  pipeline->require_subcommand(1);
  auto* run_once = pipeline->add_subcommand("run-once", "Run ingest, extract, normalize and upsert once");
  once_opts.add_to(run_once, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      env_override(mapping, "R0SCOPE_MAPPING");
      return cmd_ingest(csv, mapping, out);
    }
    if (extract->parsed()) {
      if (!rule_based && endpoint.empty() && std::getenv("R0SCOPE_ENDPOINT_URL") == nullptr) {
        std::cerr << "extract: give --endpoint <url> or --rule-based\n";
        return 2;
      }
      env_override(gazetteer_path, "R0SCOPE_GAZETTEER");
      return cmd_extract(in, endpoint, token, rule_based, gazetteer_path, concurrency, out);
    }
    if (normalize->parsed()) {
      env_override(norm_gazetteer, "R0SCOPE_GAZETTEER");
      return cmd_normalize(in, norm_gazetteer, out);
    }
    if (dump->parsed() || load->parsed()) env_override(store_path, "R0SCOPE_STORE");
    if (dump->parsed()) return cmd_dump(store_path, papers_path, summaries_path);
    if (load->parsed()) return cmd_load(store_path, papers_path, summaries_path);
    if (serve->parsed()) {
      env_override(serve_store, "R0SCOPE_STORE");
      env_override(cors_origin, "R0SCOPE_CORS_ORIGIN");
      env_override(api.host, "R0SCOPE_HOST");
      env_override_number(api.port, "R0SCOPE_PORT");
      if (!cors_origin.empty()) api.cors_origin = cors_origin;
      auto store = Store::open(serve_store);
      ApiServer server(store, api);
      int port = server.bind();
      spdlog::info("serving {} on {}:{}", serve_store, api.host, port);
      std::thread t([&] { server.listen(); });
      wait_for_signal();
      server.stop();
      t.join();
      return 0;
    }
    if (schedule->parsed()) {
      sched_opts.apply_env();
      auto rig = PipelineRig::build(sched_opts);
      Scheduler scheduler(rig->config, [&] { return rig->run(); });
      scheduler.start();
      wait_for_signal();
      scheduler.stop();
      return 0;
    }
    if (run_once->parsed()) {
      once_opts.apply_env();
      auto rig = PipelineRig::build(once_opts);
      std::cout << json(rig->run()).dump() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", error_code_name(e.code())}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
