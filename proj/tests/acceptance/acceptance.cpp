// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
// fails. `--write-gold <path>` regenerates the golden summary file instead.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "corpus.hpp"
#include "generators.hpp"
#include "oracle.hpp"
#include "r0scope/analytics.hpp"
#include "r0scope/error.hpp"
#include "r0scope/ingest.hpp"
#include "r0scope/json_io.hpp"
#include "r0scope/normalize.hpp"
#include "r0scope/pipeline.hpp"
#include "r0scope/service.hpp"
#include "test_support.hpp"

using namespace r0scope;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string show(const std::vector<std::string>& v) {
  std::string out = "[";
  for (const auto& s : v) out += (out.size() > 1 ? ", " : "") + s;
  return out + "]";
}

using Steady = std::chrono::steady_clock;

double seconds_since(Steady::time_point t0) {
  return std::chrono::duration<double>(Steady::now() - t0).count();
}

// A store populated by one pipeline run over a fixture directory's CSV and
// recorded responses.
struct FixtureRun {
  r0test::TempDir dir;
  fs::path drop;
  Store store;
  PipelineRunReport report;

  explicit FixtureRun(const std::string& fixture)
      : drop(dir.path() / "drop"), store(Store::open(dir.file("store.db"))) {
    fs::create_directories(drop);
    fs::copy_file(r0test::fixture_path(fixture + "/papers.csv"), drop / "papers.csv");
    report = run_again(fixture);
  }

  PipelineRunReport run_again(const std::string& fixture) {
    CsvDropSource source(drop);
    RecordedResponseExtractor extractor(r0test::load_responses(r0test::fixture_path(fixture + "/responses.ndjson")));
    PipelineContext ctx{store, source, extractor, r0test::bundled_gazetteer()};
    return run_pipeline_once({}, ctx);
  }
};

std::string summary_lines(const Store& store) {
  std::string out;
  for (const auto& s : store.snapshot().summaries) out += json(s).dump() + "\n";
  return out;
}

std::set<std::string> keys_of(const json& j) {
  std::set<std::string> out;
  for (const auto& [k, v] : j.items()) out.insert(k);
  return out;
}

// ---------------------------------------------------------------------------

void golden_pipeline() {
  auto t0 = Steady::now();
  FixtureRun run("golden");
  auto got = summary_lines(run.store);
  double elapsed = seconds_since(t0);
  auto want = r0test::read_file(r0test::fixture_path("golden/gold.ndjson"));
  if (got != want) {
    auto g = read_ndjson(got), w = read_ndjson(want);
    for (std::size_t i = 0; i < std::min(g.size(), w.size()); ++i) {
      expect(g[i] == w[i], "summary line " + std::to_string(i + 1) + " differs: got " + g[i].dump() +
                               " want " + w[i].dump());
    }
    expect(false, "got " + std::to_string(g.size()) + " summaries, gold has " + std::to_string(w.size()) +
                      " (or byte-level formatting differs)");
  }
  // Byte stability: a second, independent run produces the same bytes.
  FixtureRun again("golden");
  expect(summary_lines(again.store) == want, "second run differs from the first");
  expect(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
}

void unanswerable_filtering() {
  FixtureRun run("filter10");
  expect(run.report.papers_seen == 10, "papers_seen " + std::to_string(run.report.papers_seen));
  expect(run.report.unanswerable_count == 4, "unanswerable_count " + std::to_string(run.report.unanswerable_count));
  std::set<std::string> with_summaries;
  for (const auto& s : run.store.snapshot().summaries) with_summaries.insert(s.summary.pmid);
  expect(with_summaries.size() == 6, "summaries cover " + std::to_string(with_summaries.size()) + " papers");
}

void ebola_countries() {
  FixtureRun run("ebola");
  ApiConfig cfg;
  cfg.host = "127.0.0.1";
  cfg.port = 0;
  ApiServer server(run.store, cfg);
  int port = server.bind();
  std::thread loop([&] { server.listen(); });
  struct Stop {
    ApiServer& s;
    std::thread& t;
    ~Stop() {
      s.stop();
      t.join();
    }
  } stop{server, loop};

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/rq2?disease=ebola");
  expect(res && res->status == 200, "GET /api/rq2 failed");
  std::set<std::string> countries;
  const auto rq2 = json::parse(res->body);
  for (const auto& row : rq2.at("rows")) countries.insert(row.at("country").get<std::string>());
  const std::set<std::string> want{"Congo", "Guinea", "Liberia", "Sierra Leone", "Uganda", "Zambia"};
  expect(countries == want, "countries " + show({countries.begin(), countries.end()}));

  auto drill = client.Get("/api/drilldown?disease=ebola&country=Liberia&rq=rq2");
  expect(drill && drill->status == 200, "GET /api/drilldown failed");
  std::vector<std::string> pmids, urls;
  const auto papers = json::parse(drill->body);
  for (const auto& p : papers.at("papers")) {
    pmids.push_back(p.at("pmid"));
    urls.push_back(p.at("pubmed_url"));
  }
  expect(pmids == std::vector<std::string>{"34000004", "34000003"}, "drilldown pmids " + show(pmids));
  expect(urls == std::vector<std::string>{"https://pubmed.ncbi.nlm.nih.gov/34000004/",
                                          "https://pubmed.ncbi.nlm.nih.gov/34000003/"},
         "drilldown urls " + show(urls));
}

void oracle_equivalence() {
  auto t0 = Steady::now();
  std::mt19937_64 rng(5000);
  for (int iter = 0; iter < 100; ++iter) {
    std::size_t n = iter == 0 ? 5000 : 500 + rng() % 4501;
    auto c = r0test::random_corpus(rng, n);
    r0test::TempDir dir;
    auto store = Store::open(dir.file("s.db"));
    store.upsert_batch(c.papers, c.summaries);
    auto snap = store.snapshot();
    std::vector<StructuredSummary> all;
    for (const auto& s : snap.summaries) all.push_back(s.summary);
    const std::string at = "store " + std::to_string(iter) + ": ";

    std::set<std::string> diseases, countries;
    for (const auto& s : all) {
      diseases.insert(s.disease_key);
      if (s.location) countries.insert(s.location->country);
    }
    expect(all.size() == n && diseases.size() >= 50 && countries.size() >= 40, at + "corpus shape");

    std::optional<double> lo, hi;
    if (rng() % 2) lo = static_cast<double>(rng() % 200) / 10.0;
    if (rng() % 2) hi = lo.value_or(0.0) + static_cast<double>(rng() % 200) / 10.0;
    auto rq1 = rq1_max_r0(snap, lo, hi);
    auto rq1_want = r0test::oracle::rq1(all, lo, hi);
    expect(rq1.size() == rq1_want.size(), at + "rq1 row count");
    for (std::size_t i = 0; i < rq1.size(); ++i) {
      expect(rq1[i].disease_key == rq1_want[i].disease && rq1[i].study_count == rq1_want[i].count &&
                 r0test::oracle::as_vector(rq1[i].pmids) == rq1_want[i].pmids,
             at + "rq1 row " + std::to_string(i));
      expect(std::abs(rq1[i].max_r0 - rq1_want[i].max) <= 1e-9 &&
                 std::abs(rq1[i].mean_r0 - rq1_want[i].mean) <= 1e-9 &&
                 std::abs(rq1[i].median_r0 - rq1_want[i].median) <= 1e-9,
             at + "rq1 decimals for " + rq1[i].disease_key);
    }

    for (int k = 0; k < 5; ++k) {
      const auto& d = c.diseases[rng() % c.diseases.size()];
      auto rq2 = rq2_studies_by_location(snap, d);
      auto rq2_want = r0test::oracle::rq2(all, d);
      expect(rq2.size() == rq2_want.size(), at + "rq2 row count for " + d);
      for (std::size_t i = 0; i < rq2.size(); ++i) {
        expect(rq2[i].country == rq2_want[i].country && rq2[i].study_count == rq2_want[i].count &&
                   r0test::oracle::as_vector(rq2[i].pmids) == rq2_want[i].pmids,
               at + "rq2 row " + std::to_string(i) + " for " + d);
      }

      auto rq3 = rq3_r0_range_by_location(snap, d);
      auto rq3_want = r0test::oracle::rq3(all, d);
      expect(rq3.size() == rq3_want.size(), at + "rq3 row count for " + d);
      for (std::size_t i = 0; i < rq3.size(); ++i) {
        expect(rq3[i].country == rq3_want[i].country &&
                   r0test::oracle::as_vector(rq3[i].pmids) == rq3_want[i].pmids,
               at + "rq3 row " + std::to_string(i) + " for " + d);
        expect(std::abs(rq3[i].min_r0 - rq3_want[i].min) <= 1e-9 && std::abs(rq3[i].max_r0 - rq3_want[i].max) <= 1e-9,
               at + "rq3 decimals for " + d + "/" + rq3[i].country);
      }

      const auto& country = c.countries[rng() % c.countries.size()];
      std::optional<std::string> where;
      if (rng() % 2) where = country;
      auto drill = drilldown(snap, {d, where, std::nullopt});
      auto drill_want = r0test::oracle::drilldown_pmids(snap.papers, all, d, where);
      std::vector<std::string> drill_got;
      for (const auto& p : drill) {
        drill_got.push_back(p.pmid);
        expect(p.pubmed_url == "https://pubmed.ncbi.nlm.nih.gov/" + p.pmid + "/", at + "drilldown url " + p.pmid);
      }
      expect(drill_got == drill_want, at + "drilldown for " + d + (where ? "/" + *where : ""));
    }

    std::vector<std::string> selection;
    std::size_t pick = 1 + rng() % 3;
    for (std::size_t k = 0; k < pick; ++k) selection.push_back(c.diseases[rng() % c.diseases.size()]);
    auto rq4 = rq4_map_points(snap, selection);
    auto rq4_want = r0test::oracle::rq4(all, selection);
    expect(rq4.size() == rq4_want.size(), at + "rq4 point count");
    for (std::size_t i = 0; i < rq4.size(); ++i) {
      const auto& [disease, g] = rq4_want[i];
      expect(rq4[i].disease_key == disease && rq4[i].country == g.country && rq4[i].study_count == g.count &&
                 r0test::oracle::as_vector(rq4[i].pmids) == g.pmids,
             at + "rq4 point " + std::to_string(i));
      expect(std::abs(rq4[i].latitude - g.lat) <= 1e-9 && std::abs(rq4[i].longitude - g.lon) <= 1e-9,
             at + "rq4 coordinates " + std::to_string(i));
    }

    expect(stats_snapshot(snap) == r0test::oracle::stats(c.papers, all), at + "stats");
  }
  double elapsed = seconds_since(t0);
  expect(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
}

void parser_properties() {
  std::mt19937_64 rng(13092023);
  for (int i = 0; i < 10000; ++i) {
    auto r0 = r0test::random_r0_text(rng);
    auto r = parse_r0(r0.text);
    expect(r.min <= r.max, "r0_min > r0_max for \"" + r0.text + "\"");
    expect(r.min == r0.min && r.max == r0.max, "wrong bounds for \"" + r0.text + "\"");
    expect(parse_r0(format_r0(r)) == r, "round trip fails for \"" + r0.text + "\"");

    auto ci_case = r0test::random_ci_text(rng);
    auto ci = parse_ci(ci_case.text);
    expect(ci.has_value(), "no CI for \"" + ci_case.text + "\"");
    expect(ci->low <= ci->high, "ci.low > ci.high for \"" + ci_case.text + "\"");
    expect(ci->low == ci_case.low && ci->high == ci_case.high && ci->level == ci_case.level,
           "wrong CI for \"" + ci_case.text + "\"");

    auto d = r0test::random_disease_text(rng);
    auto once = canonical_disease(d);
    expect(canonical_disease(once) == once, "canonical_disease not idempotent on \"" + d + "\"");
  }
}

void scheduler_idempotence() {
  FixtureRun run("golden");
  auto hash = run.store.state_hash();
  SchedulerConfig cfg;
  cfg.interval = std::chrono::minutes(1);
  Scheduler scheduler(cfg, [&] { return run.run_again("golden"); });
  auto second = scheduler.trigger();
  expect(second.has_value(), "second run was skipped");
  expect(second->papers_new == 0, "papers_new " + std::to_string(second->papers_new));
  expect(second->summaries_new == 0, "summaries_new " + std::to_string(second->summaries_new));
  expect(run.store.state_hash() == hash, "state hash changed");
}

void query_fidelity() {
  const std::string want =
      "(basic reproduction number[TIAB] OR basic reproductive number[TIAB] OR basic reproduction ratio[TIAB] OR "
      "basic reproductive rate[TIAB] OR basic reproductive ratio[TIAB] OR basic reproduction rate[TIAB] OR "
      "R0[TIAB]) NOT (R0 resection OR cancer)";
  auto got = build_search_query();
  expect(got == want, "got \"" + got + "\"");
}

void api_contract() {
  FixtureRun run("golden");
  ApiServer api(run.store, ApiConfig{});
  using S = std::set<std::string>;
  auto fields = [&](const std::string& path, QueryParams params) {
    auto r = api.handle(path, params);
    expect(r.status == 200, path + " answered " + std::to_string(r.status));
    return r.body;
  };
  auto first_row = [&](const json& body, const char* key, const std::string& path) {
    expect(body.contains(key) && body[key].is_array() && !body[key].empty(), path + " has no " + key);
    return body[key][0];
  };

  expect(keys_of(fields("/api/health", {})) == S{"status", "watermark"}, "/api/health fields");
  expect(keys_of(fields("/api/stats", {})) ==
             S{"total_papers", "total_summaries", "distinct_diseases", "distinct_locations"},
         "/api/stats fields");

  auto papers = fields("/api/papers", {{"page", "1"}, {"size", "10"}});
  expect(keys_of(papers) == S{"page", "size", "q", "total", "rows"}, "/api/papers fields");
  expect(keys_of(first_row(papers, "rows", "/api/papers")) ==
             S{"pmid", "title", "abstract", "pub_date_raw", "pub_year", "fetched_at", "pubmed_url"},
         "/api/papers row fields");

  auto rq1 = fields("/api/rq1", {});
  expect(keys_of(rq1) == S{"r0_min", "r0_max", "rows"}, "/api/rq1 fields");
  expect(keys_of(first_row(rq1, "rows", "/api/rq1")) ==
             S{"disease_key", "max_r0", "mean_r0", "median_r0", "study_count", "pmids"},
         "/api/rq1 row fields");

  auto snap = run.store.snapshot();
  std::string disease = rq1_max_r0(snap, std::nullopt, std::nullopt).front().disease_key;
  for (const auto& row : rq2_studies_by_location(snap, "covid-19")) {
    if (!row.pmids.empty()) disease = "covid-19";
  }

  auto rq2 = fields("/api/rq2", {{"disease", disease}});
  expect(keys_of(rq2) == S{"disease", "rows"}, "/api/rq2 fields");
  expect(keys_of(first_row(rq2, "rows", "/api/rq2")) == S{"country", "study_count", "pmids"}, "/api/rq2 row fields");

  auto rq3 = fields("/api/rq3", {{"disease", disease}});
  expect(keys_of(rq3) == S{"disease", "rows"}, "/api/rq3 fields");
  expect(keys_of(first_row(rq3, "rows", "/api/rq3")) == S{"country", "min_r0", "max_r0", "pmids"},
         "/api/rq3 row fields");

  auto rq4 = fields("/api/rq4", {{"diseases", disease}});
  expect(keys_of(rq4) == S{"diseases", "points"}, "/api/rq4 fields");
  expect(keys_of(first_row(rq4, "points", "/api/rq4")) ==
             S{"disease_key", "country", "latitude", "longitude", "study_count", "pmids"},
         "/api/rq4 point fields");

  auto drill = fields("/api/drilldown", {{"disease", disease}});
  expect(keys_of(drill) == S{"disease", "country", "rq", "papers"}, "/api/drilldown fields");
  expect(keys_of(first_row(drill, "papers", "/api/drilldown")) == S{"pmid", "title", "pub_year", "pubmed_url"},
         "/api/drilldown paper fields");

  // Bodies are projections of the analytics results.
  expect(fields("/api/stats", {}) == json(stats_snapshot(snap)), "/api/stats body");
  expect(fields("/api/rq2", {{"disease", disease}})["rows"] == json(rq2_studies_by_location(snap, disease)),
         "/api/rq2 body");

  auto too_many = api.handle("/api/rq4", {{"diseases", "a,b,c,d"}});
  expect(too_many.status == 400, "rq4 with 4 diseases answered " + std::to_string(too_many.status));
  expect(too_many.body.value("error", "") == "TooManyDiseases", "rq4 error " + too_many.body.dump());
}

struct Criterion {
  const char* name;
  std::function<void()> check;
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::off);

  if (argc == 3 && std::strcmp(argv[1], "--write-gold") == 0) {
    FixtureRun run("golden");
    r0test::write_file(argv[2], summary_lines(run.store));
    std::cout << "wrote " << argv[2] << "\n";
    return 0;
  }

  const std::vector<Criterion> criteria = {
      {"golden pipeline", golden_pipeline},
      {"unanswerable filtering", unanswerable_filtering},
      {"ebola country set and drilldown", ebola_countries},
      {"oracle equivalence", oracle_equivalence},
      {"parser properties", parser_properties},
      {"scheduler idempotence", scheduler_idempotence},
      {"query-string fidelity", query_fidelity},
      {"api contract", api_contract},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = Steady::now();
    std::string detail;
    bool ok = true;
    try {
      c.check();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2fs", seconds_since(t0));
    std::cout << (ok ? "PASS " : "FAIL ") << c.name << " (" << timing << ")";
    if (!ok) std::cout << ": " << detail;
    std::cout << std::endl;
    failed += ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
