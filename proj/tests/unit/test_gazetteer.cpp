#include <doctest.h>

#include "r0scope/error.hpp"
#include "r0scope/gazetteer.hpp"
#include "r0scope/text.hpp"
#include "test_support.hpp"

using namespace r0scope;

TEST_CASE("bundled gazetteer covers the top countries") {
  const auto& gaz = r0test::bundled_gazetteer();
  CHECK(gaz.size() >= 200);
  // Countries with the most R0 summaries in the reference corpus, plus the
  // six Ebola countries used by the drilldown fixture.
  for (const char* name : {"China", "India", "United States", "Brazil", "Japan", "South Korea", "Italy", "Iran",
                           "Nigeria", "Spain", "United Kingdom", "Germany", "France", "Canada", "Australia",
                           "Mexico", "Pakistan", "Saudi Arabia", "Indonesia", "South Africa", "Congo", "Guinea",
                           "Liberia", "Sierra Leone", "Uganda", "Zambia"}) {
    CHECK_MESSAGE(gaz.lookup(name), name);
  }
  for (const auto& e : gaz.entries()) {
    CHECK(e.iso2.size() == 2);
    CHECK(e.latitude >= -90);
    CHECK(e.latitude <= 90);
    CHECK(e.longitude >= -180);
    CHECK(e.longitude <= 180);
    CHECK(is_continent_code(e.continent));
  }
}

TEST_CASE("resolve examples") {
  const auto& gaz = r0test::bundled_gazetteer();
  auto china = resolve_location("China", gaz);
  REQUIRE(china);
  CHECK(china->country == "China");
  CHECK(china->iso2 == "CN");
  CHECK_FALSE(resolve_location("Atlantis", gaz));
  CHECK_FALSE(gaz.lookup("Wuhan"));
  auto wuhan = resolve_location("Wuhan, China", gaz);
  REQUIRE(wuhan);
  CHECK(wuhan->country == "China");
  auto usa = resolve_location("USA", gaz);
  REQUIRE(usa);
  CHECK(usa->country == "United States");
  CHECK_FALSE(resolve_location("unknown", gaz));
  CHECK_FALSE(resolve_location("", gaz));
}

TEST_CASE("resolution ignores casing") {
  const auto& gaz = r0test::bundled_gazetteer();
  std::mt19937 rng(3);
  for (const auto& name : gaz.names()) {
    std::string mixed = name;
    for (auto& c : mixed) {
      if (rng() % 2) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    CHECK_MESSAGE(gaz.resolve(mixed) == gaz.resolve(name), name);
    CHECK(gaz.resolve(ascii_lower(name)) == gaz.resolve(name));
    CHECK(gaz.resolve(fold_case(name)) == gaz.resolve(name));
  }
}

TEST_CASE("format validation") {
  auto bad = [](const std::string& tsv) {
    try {
      Gazetteer::parse(tsv);
    } catch (const Error& e) {
      return e.code() == ErrorCode::GazetteerFormat;
    }
    return false;
  };
  const std::string header = "canonical_name\tcountry\tiso2\tlatitude\tlongitude\tcontinent\taliases\n";
  CHECK(bad("name\tcountry\n"));
  CHECK(bad(header + "X\tX\tx\t0\t0\tEU\t\n"));
  CHECK(bad(header + "X\tX\tXX\t91\t0\tEU\t\n"));
  CHECK(bad(header + "X\tX\tXX\t0\t0\tZZ\t\n"));
  CHECK(bad(header + "X\tX\tXX\t0\n"));
  auto ok = Gazetteer::parse(header + "Ruritania\tRuritania\tRU\t45.5\t10.25\tEU\tRuri|Kingdom of Ruritania\n");
  REQUIRE(ok.size() == 1);
  auto hit = ok.resolve("kingdom of RURITANIA");
  REQUIRE(hit);
  CHECK(hit->latitude == 45.5);
}
