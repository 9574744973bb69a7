#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "r0scope/store.hpp"

namespace r0scope {

struct PmidLess {
  bool operator()(std::string_view a, std::string_view b) const { return pmid_less(a, b); }
};
using PmidSet = std::set<std::string, PmidLess>;

struct DiseaseMaxR0Row {
  std::string disease_key;
  double max_r0 = 0;
  double mean_r0 = 0;    // over the group's r0_max values
  double median_r0 = 0;  // even-sized groups average the two middle values
  std::size_t study_count = 0;  // distinct pmids
  PmidSet pmids;

  bool operator==(const DiseaseMaxR0Row&) const = default;
};

struct LocationStudyCountRow {
  std::string country;
  std::size_t study_count = 0;  // summaries, not papers
  PmidSet pmids;

  bool operator==(const LocationStudyCountRow&) const = default;
};

struct LocationR0RangeRow {
  std::string country;
  double min_r0 = 0;
  double max_r0 = 0;
  PmidSet pmids;

  bool operator==(const LocationR0RangeRow&) const = default;
};

struct MapPoint {
  std::string disease_key;
  std::string country;
  double latitude = 0;
  double longitude = 0;
  std::size_t study_count = 0;
  PmidSet pmids;

  bool operator==(const MapPoint&) const = default;
};

struct StatsSnapshot {
  std::size_t total_papers = 0;
  std::size_t total_summaries = 0;
  std::size_t distinct_diseases = 0;
  std::size_t distinct_locations = 0;  // resolved countries

  bool operator==(const StatsSnapshot&) const = default;
};

enum class ResearchQuestion { Rq1, Rq2, Rq3, Rq4 };
std::optional<ResearchQuestion> parse_research_question(std::string_view tag);

struct DrilldownSelector {
  std::string disease_key;
  std::optional<std::string> country;
  // Every chart bar for a disease/country pair rests on the same summaries,
  // so the tag only records which chart was clicked.
  std::optional<ResearchQuestion> question;
};

struct DrilldownPaper {
  std::string pmid;
  std::string title;
  std::optional<int> pub_year;
  std::string pubmed_url;

  bool operator==(const DrilldownPaper&) const = default;
};

inline constexpr std::size_t kMaxMapDiseases = 3;

std::vector<DiseaseMaxR0Row> rq1_max_r0(const StoreSnapshot& corpus, std::optional<double> r0_lo = std::nullopt,
                                        std::optional<double> r0_hi = std::nullopt);
std::vector<LocationStudyCountRow> rq2_studies_by_location(const StoreSnapshot& corpus,
                                                           std::string_view disease_key);
std::vector<LocationR0RangeRow> rq3_r0_range_by_location(const StoreSnapshot& corpus,
                                                         std::string_view disease_key);
std::vector<MapPoint> rq4_map_points(const StoreSnapshot& corpus, const std::vector<std::string>& disease_keys);
StatsSnapshot stats_snapshot(const StoreSnapshot& corpus);
std::vector<DrilldownPaper> drilldown(const StoreSnapshot& corpus, const DrilldownSelector& selector);

}  // namespace r0scope
