#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "fixtures.hpp"
#include "r0scope/analytics.hpp"
#include "r0scope/error.hpp"
#include "r0scope/json_io.hpp"
#include "r0scope/service.hpp"
#include "test_support.hpp"

using namespace r0scope;
using nlohmann::json;

namespace {

struct ServiceRig {
  r0test::TempDir dir;
  Store store;
  ApiServer api;

  explicit ServiceRig(bool seeded = true) : store(Store::open(dir.file("s.db"))), api(store, ApiConfig{}) {
    if (seeded) store.upsert(r0test::three_paper_batch());
  }
};

std::set<std::string> keys_of(const json& j) {
  std::set<std::string> out;
  for (const auto& [k, v] : j.items()) out.insert(k);
  return out;
}

}  // namespace

TEST_CASE("stats on an empty store") {
  ServiceRig rig(false);
  auto r = rig.api.handle("/api/stats", {});
  CHECK(r.status == 200);
  CHECK(r.body == json::parse(R"({"total_papers":0,"total_summaries":0,"distinct_diseases":0,"distinct_locations":0})"));
}

TEST_CASE("bodies are projections of the analytics calls") {
  ServiceRig rig;
  auto snap = rig.store.snapshot();
  CHECK(rig.api.handle("/api/stats", {}).body == json(stats_snapshot(snap)));

  auto rq2 = rig.api.handle("/api/rq2", {{"disease", "Ebola"}});
  CHECK(rq2.status == 200);
  CHECK(rq2.body["disease"] == "ebola");
  CHECK(rq2.body["rows"] == json(rq2_studies_by_location(snap, "ebola")));

  auto rq3 = rig.api.handle("/api/rq3", {{"disease", " COVID-19 "}});
  CHECK(rq3.body["rows"] == json(rq3_r0_range_by_location(snap, "covid-19")));

  auto rq1 = rig.api.handle("/api/rq1", {{"r0_min", "1.7"}, {"r0_max", "6"}});
  CHECK(rq1.body["rows"] == json(rq1_max_r0(snap, 1.7, 6.0)));
  CHECK(rq1.body["r0_min"] == 1.7);

  auto rq4 = rig.api.handle("/api/rq4", {{"diseases", "Ebola,covid-19,ebola"}});
  CHECK(rq4.status == 200);
  CHECK(rq4.body["diseases"] == json{"ebola", "covid-19"});
  CHECK(rq4.body["points"] == json(rq4_map_points(snap, {"ebola", "covid-19"})));

  auto drill = rig.api.handle("/api/drilldown", {{"disease", "ebola"}, {"country", "Liberia"}, {"rq", "rq2"}});
  CHECK(drill.body["papers"] == json(drilldown(snap, {"ebola", "Liberia", ResearchQuestion::Rq2})));
}

TEST_CASE("documented field sets") {
  ServiceRig rig;
  using S = std::set<std::string>;
  CHECK(keys_of(rig.api.handle("/api/health", {}).body) == S{"status", "watermark"});
  CHECK(keys_of(rig.api.handle("/api/stats", {}).body) ==
        S{"total_papers", "total_summaries", "distinct_diseases", "distinct_locations"});
  auto papers = rig.api.handle("/api/papers", {{"q", "ebola"}}).body;
  CHECK(keys_of(papers) == S{"page", "size", "q", "total", "rows"});
  CHECK(papers["total"] == 2);
  CHECK(keys_of(papers["rows"][0]) ==
        S{"pmid", "title", "abstract", "pub_date_raw", "pub_year", "fetched_at", "pubmed_url"});
  auto rq1 = rig.api.handle("/api/rq1", {}).body;
  CHECK(keys_of(rq1["rows"][0]) == S{"disease_key", "max_r0", "mean_r0", "median_r0", "study_count", "pmids"});
  CHECK(keys_of(rig.api.handle("/api/rq2", {{"disease", "ebola"}}).body["rows"][0]) ==
        S{"country", "study_count", "pmids"});
  CHECK(keys_of(rig.api.handle("/api/rq3", {{"disease", "ebola"}}).body["rows"][0]) ==
        S{"country", "min_r0", "max_r0", "pmids"});
  CHECK(keys_of(rig.api.handle("/api/rq4", {{"diseases", "ebola"}}).body["points"][0]) ==
        S{"disease_key", "country", "latitude", "longitude", "study_count", "pmids"});
  CHECK(keys_of(rig.api.handle("/api/drilldown", {{"disease", "ebola"}}).body["papers"][0]) ==
        S{"pmid", "title", "pub_year", "pubmed_url"});
  CHECK(keys_of(rig.api.handle("/api/drilldown", {{"disease", "ebola"}, {"rq", "RQ2"}}).body) == S{"disease", "country", "rq", "papers"});
}

TEST_CASE("validation errors") {
  ServiceRig rig;
  auto expect = [&](const std::string& path, QueryParams params, int status, const std::string& code) {
    auto r = rig.api.handle(path, params);
    CHECK_MESSAGE(r.status == status, path);
    CHECK_MESSAGE(r.body["error"] == code, path);
    CHECK(r.body.contains("message"));
  };
  expect("/api/rq4", {{"diseases", "a,b,c,d"}}, 400, "TooManyDiseases");
  expect("/api/rq4", {}, 400, "EmptySelection");
  expect("/api/rq1", {{"r0_min", "5"}, {"r0_max", "1"}}, 400, "InvalidRange");
  expect("/api/rq1", {{"r0_min", "abc"}}, 400, "InvalidParameter");
  expect("/api/rq2", {}, 400, "InvalidParameter");
  expect("/api/papers", {{"size", "501"}}, 400, "InvalidParameter");
  expect("/api/papers", {{"page", "0"}}, 400, "InvalidParameter");
  expect("/api/papers", {{"page", "-1"}}, 400, "InvalidParameter");
  expect("/api/drilldown", {{"disease", "ebola"}, {"rq", "rq9"}}, 400, "InvalidParameter");
  expect("/api/nothing", {}, 404, "NotFound");
  CHECK(rig.api.handle("/api/rq2", {{"disease", "no-such-disease"}}).body["rows"] == json::array());
}

TEST_CASE("http binding, cors and methods") {
  ServiceRig rig;
  ApiConfig cfg;
  cfg.host = "127.0.0.1";
  cfg.port = 0;
  cfg.cors_origin = "http://localhost:5173";
  ApiServer server(rig.store, cfg);
  int port = server.bind();
  std::thread t([&] { server.listen(); });

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/rq2?disease=Ebola");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
  CHECK(json::parse(res->body) == rig.api.handle("/api/rq2", {{"disease", "ebola"}}).body);

  auto bad = client.Get("/api/rq4?diseases=a,b,c,d");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["error"] == "TooManyDiseases");

  auto post = client.Post("/api/stats", "{}", "application/json");
  REQUIRE(post);
  CHECK(post->status == 404);

  auto missing = client.Get("/elsewhere");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  ApiConfig clash = cfg;
  clash.port = port;
  ApiServer second(rig.store, clash);
  try {
    second.bind();
    FAIL("expected BindFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BindFailure);
  }

  server.stop();
  t.join();
}

TEST_CASE("reads keep working during writes") {
  ServiceRig rig(false);
  std::atomic<bool> done{false};
  std::atomic<int> failures{0};
  std::thread reader([&] {
    while (!done) {
      auto r = rig.api.handle("/api/stats", {});
      auto total = r.body.value("total_summaries", -1);
      if (r.status != 200 || (total != 0 && total != 5)) ++failures;
    }
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  rig.store.upsert(r0test::three_paper_batch());
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  done = true;
  reader.join();
  CHECK(failures == 0);
  CHECK(rig.api.handle("/api/stats", {}).body["total_summaries"] == 5);
}
