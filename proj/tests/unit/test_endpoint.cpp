#include <doctest.h>

#include <atomic>
#include <nlohmann/json.hpp>

#include "r0scope/endpoint.hpp"
#include "r0scope/error.hpp"
#include "stub_server.hpp"
#include "test_support.hpp"

using namespace r0scope;

namespace {

EndpointConfig fast_config(const std::string& url, int retries = 3) {
  EndpointConfig c;
  c.url = url;
  c.retry_budget = retries;
  c.backoff = std::chrono::milliseconds(5);
  c.timeout = std::chrono::milliseconds(2000);
  return c;
}

}  // namespace

TEST_CASE("passthrough of the completion text") {
  std::string seen_body, seen_auth;
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
      seen_body = req.body;
      seen_auth = req.get_header_value("Authorization");
      res.set_content(R"([{"generated_text": "unanswerable"}])", "application/json");
    });
  });
  auto cfg = fast_config(stub.url("/generate"));
  cfg.token = "secret";
  CHECK(query_endpoint("hello", cfg) == "unanswerable");
  CHECK(nlohmann::json::parse(seen_body) == nlohmann::json{{"inputs", "hello"}});
  CHECK(seen_auth == "Bearer secret");
}

TEST_CASE("transient failures are retried") {
  std::atomic<int> calls{0};
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
      if (++calls <= 2) {
        res.status = 503;
        return;
      }
      res.set_content(R"({"generated_text": "ok body"})", "application/json");
    });
  });
  CHECK(query_endpoint("p", fast_config(stub.url("/generate"), 3)) == "ok body");
  CHECK(calls == 3);
}

TEST_CASE("retry budget is finite") {
  std::atomic<int> calls{0};
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 500;
    });
  });
  try {
    query_endpoint("p", fast_config(stub.url("/generate"), 2));
    FAIL("expected failure");
  } catch (const EndpointError& e) {
    CHECK(e.status() == 500);
  }
  CHECK(calls == 3);
}

TEST_CASE("4xx is never retried") {
  std::atomic<int> calls{0};
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 401;
    });
  });
  try {
    query_endpoint("p", fast_config(stub.url("/generate"), 5));
    FAIL("expected EndpointRejected");
  } catch (const EndpointError& e) {
    CHECK(e.code() == ErrorCode::EndpointRejected);
    CHECK(e.status() == 401);
  }
  CHECK(calls == 1);
}

TEST_CASE("unreachable endpoint") {
  int port;
  {
    r0test::StubServer stub([](httplib::Server&) {});
    port = stub.port();
  }
  try {
    query_endpoint("p", fast_config("http://127.0.0.1:" + std::to_string(port) + "/generate", 1));
    FAIL("expected failure");
  } catch (const EndpointError& e) {
    CHECK((e.code() == ErrorCode::EndpointUnreachable || e.code() == ErrorCode::Timeout));
  }
}

TEST_CASE("in-flight requests are bounded") {
  std::atomic<int> active{0}, peak{0};
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
      int now = ++active;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(30));
      --active;
      res.set_content("\"unanswerable\"", "application/json");
    });
  });
  auto cfg = fast_config(stub.url("/generate"));
  cfg.max_in_flight = 2;
  EndpointExtractor extractor(cfg);
  CHECK(extractor.concurrency() == 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      auto r = extractor.extract(r0test::paper(std::to_string(i + 1), "t"));
      CHECK_FALSE(r.answerable());
    });
  }
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
}

TEST_CASE("extractor errors carry the pmid") {
  r0test::StubServer stub([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request&, httplib::Response& res) { res.status = 403; });
  });
  EndpointExtractor extractor(fast_config(stub.url("/generate")));
  try {
    extractor.extract(r0test::paper("4242", "t"));
    FAIL("expected EndpointError");
  } catch (const EndpointError& e) {
    CHECK(e.pmid() == "4242");
    CHECK(e.status() == 403);
  }
}

TEST_CASE("completion text extraction") {
  CHECK(completion_text(R"([{"generated_text": "x"}])") == "x");
  CHECK(completion_text(R"({"outputs": {"text": "y"}, "other": "z"})") == "y");
  CHECK(completion_text("plain words") == "plain words");
  CHECK(parse_url("http://h:1/a/b").path == "/a/b");
  CHECK(parse_url("http://h:1").path == "/");
  CHECK_THROWS_AS(parse_url("nohost"), Error);
}

TEST_CASE("environment overrides") {
  setenv("R0SCOPE_ENDPOINT_URL", "http://env:9/x", 1);
  setenv("R0SCOPE_ENDPOINT_RETRIES", "7", 1);
  auto cfg = EndpointConfig::from_env();
  CHECK(cfg.url == "http://env:9/x");
  CHECK(cfg.retry_budget == 7);
  unsetenv("R0SCOPE_ENDPOINT_URL");
  unsetenv("R0SCOPE_ENDPOINT_RETRIES");
}
