#include <doctest.h>

#include "r0scope/error.hpp"
#include "r0scope/pubmed.hpp"
#include "stub_server.hpp"
#include "test_support.hpp"

using namespace r0scope;

TEST_CASE("efetch xml to records") {
  auto records = parse_efetch_xml(r0test::read_file(r0test::fixture_path("efetch_sample.xml")));
  REQUIRE(records.size() == 2);  // the title-less article is skipped
  CHECK(records[0].pmid == "32000001");
  CHECK(records[0].title == "Estimating the basic reproduction number of COVID-19 in Wuhan, China.");
  CHECK(records[0].abstract ==
        "BACKGROUND: The outbreak began in December 2019. RESULTS: We estimated R0 at 2.2 (95% CI: 1.4-3.9).");
  CHECK(records[0].pub_date_raw == "2020 Mar 05");
  CHECK(records[0].pub_year == 2020);
  CHECK(records[1].pmid == "32000002");
  CHECK(records[1].title == "Ebola virus disease transmission in Liberia & Guinea.");
  CHECK(records[1].abstract.empty());
  CHECK(records[1].pub_date_raw == "2015 Nov-Dec");
  CHECK(records[1].pub_year == 2015);
  CHECK_THROWS_AS(parse_efetch_xml("<PubmedArticleSet><oops"), Error);
}

TEST_CASE("esearch id list") {
  CHECK(parse_esearch_json(R"({"esearchresult": {"count": "2", "idlist": ["1", "22"]}})") ==
        std::vector<std::string>{"1", "22"});
  CHECK_THROWS_AS(parse_esearch_json("{}"), Error);
}

TEST_CASE("query dates") {
  Timestamp t = std::chrono::sys_days{std::chrono::year{2023} / 9 / 13} + std::chrono::hours(5);
  CHECK(format_query_date(t) == "2023/09/13");
}

TEST_CASE("rate limiter spaces calls") {
  RateLimiter limiter(20);
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) limiter.acquire();
  CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(190));
}

TEST_CASE("client runs esearch then efetch with the standard query") {
  std::string term, ids, tool;
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Get("/eutils/esearch.fcgi", [&](const httplib::Request& req, httplib::Response& res) {
      term = req.get_param_value("term");
      tool = req.get_param_value("tool");
      res.set_content(R"({"esearchresult": {"idlist": ["32000001", "32000002"]}})", "application/json");
    });
    s.Get("/eutils/efetch.fcgi", [&](const httplib::Request& req, httplib::Response& res) {
      ids = req.get_param_value("id");
      res.set_content(r0test::read_file(r0test::fixture_path("efetch_sample.xml")), "text/xml");
    });
  });
  PubMedConfig cfg;
  cfg.base_url = stub.url("/eutils");
  cfg.requests_per_second = 100;
  PubMedClient client(cfg);
  Timestamp since = std::chrono::sys_days{std::chrono::year{2023} / 1 / 1};
  Timestamp until = std::chrono::sys_days{std::chrono::year{2023} / 9 / 13};
  auto records = client.fetch_window(since, until);
  CHECK(records.size() == 2);
  CHECK(term == build_search_query(DateWindow{"2023/01/01", "2023/09/13"}));
  CHECK(ids == "32000001,32000002");
  CHECK(tool == "r0scope");
}

TEST_CASE("client reports an unavailable source") {
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Get("/eutils/esearch.fcgi", [](const httplib::Request&, httplib::Response& res) { res.status = 429; });
  });
  PubMedConfig cfg;
  cfg.base_url = stub.url("/eutils");
  PubMedClient client(cfg);
  try {
    client.search("x");
    FAIL("expected SourceUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SourceUnavailable);
  }
}
