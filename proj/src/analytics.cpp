#include "r0scope/analytics.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "r0scope/error.hpp"

namespace r0scope {

namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

bool paper_order(const PaperRecord& a, const PaperRecord& b) {
  if (a.pub_year.has_value() != b.pub_year.has_value()) return a.pub_year.has_value();
  if (a.pub_year && *a.pub_year != *b.pub_year) return *a.pub_year > *b.pub_year;
  return pmid_less(a.pmid, b.pmid);
}

// Summaries of one disease that have a resolved location, grouped by country
// (std::map keeps countries sorted).
std::map<std::string, std::vector<const StructuredSummary*>> by_country(const StoreSnapshot& corpus,
                                                                        std::string_view disease_key) {
  std::map<std::string, std::vector<const StructuredSummary*>> groups;
  for (const auto& row : corpus.summaries) {
    const auto& s = row.summary;
    if (s.disease_key != disease_key || !s.location) continue;
    groups[s.location->country].push_back(&s);
  }
  return groups;
}

}  // namespace

std::optional<ResearchQuestion> parse_research_question(std::string_view tag) {
  std::string t = ascii_lower(trim(tag));
  if (t == "rq1") return ResearchQuestion::Rq1;
  if (t == "rq2") return ResearchQuestion::Rq2;
  if (t == "rq3") return ResearchQuestion::Rq3;
  if (t == "rq4") return ResearchQuestion::Rq4;
  return std::nullopt;
}

std::vector<DiseaseMaxR0Row> rq1_max_r0(const StoreSnapshot& corpus, std::optional<double> r0_lo,
                                        std::optional<double> r0_hi) {
  if (r0_lo && r0_hi && *r0_lo > *r0_hi) {
    throw Error(ErrorCode::InvalidRange, "r0_min " + format_decimal(*r0_lo) + " exceeds r0_max " +
                                             format_decimal(*r0_hi));
  }
  struct Group {
    std::vector<double> maxima;
    PmidSet pmids;
  };
  std::unordered_map<std::string, Group> groups;
  for (const auto& row : corpus.summaries) {
    auto& g = groups[row.summary.disease_key];
    g.maxima.push_back(row.summary.r0_max);
    g.pmids.insert(row.summary.pmid);
  }

  std::vector<DiseaseMaxR0Row> out;
  for (auto& [key, g] : groups) {
    DiseaseMaxR0Row r;
    r.disease_key = key;
    r.max_r0 = *std::max_element(g.maxima.begin(), g.maxima.end());
    if ((r0_lo && r.max_r0 < *r0_lo) || (r0_hi && r.max_r0 > *r0_hi)) continue;
    double sum = 0;
    for (double v : g.maxima) sum += v;
    r.mean_r0 = sum / static_cast<double>(g.maxima.size());
    r.median_r0 = median_of(std::move(g.maxima));
    r.study_count = g.pmids.size();
    r.pmids = std::move(g.pmids);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const DiseaseMaxR0Row& a, const DiseaseMaxR0Row& b) {
    if (a.max_r0 != b.max_r0) return a.max_r0 > b.max_r0;
    return a.disease_key < b.disease_key;
  });
  return out;
}

std::vector<LocationStudyCountRow> rq2_studies_by_location(const StoreSnapshot& corpus,
                                                           std::string_view disease_key) {
  std::vector<LocationStudyCountRow> out;
  for (const auto& [country, members] : by_country(corpus, disease_key)) {
    LocationStudyCountRow r;
    r.country = country;
    r.study_count = members.size();
    for (const auto* s : members) r.pmids.insert(s->pmid);
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const LocationStudyCountRow& a, const LocationStudyCountRow& b) {
    return a.study_count > b.study_count;
  });
  return out;
}

std::vector<LocationR0RangeRow> rq3_r0_range_by_location(const StoreSnapshot& corpus,
                                                         std::string_view disease_key) {
  std::vector<LocationR0RangeRow> out;
  for (const auto& [country, members] : by_country(corpus, disease_key)) {
    LocationR0RangeRow r;
    r.country = country;
    r.min_r0 = members.front()->r0_min;
    r.max_r0 = members.front()->r0_max;
    for (const auto* s : members) {
      r.min_r0 = std::min(r.min_r0, s->r0_min);
      r.max_r0 = std::max(r.max_r0, s->r0_max);
      r.pmids.insert(s->pmid);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MapPoint> rq4_map_points(const StoreSnapshot& corpus, const std::vector<std::string>& disease_keys) {
  std::vector<std::string> distinct;
  for (const auto& k : disease_keys) {
    if (std::find(distinct.begin(), distinct.end(), k) == distinct.end()) distinct.push_back(k);
  }
  if (distinct.empty()) throw Error(ErrorCode::EmptySelection, "select at least one disease");
  if (distinct.size() > kMaxMapDiseases) {
    throw Error(ErrorCode::TooManyDiseases, "at most " + std::to_string(kMaxMapDiseases) +
                                                " diseases can be compared, got " + std::to_string(distinct.size()));
  }

  std::vector<MapPoint> out;
  for (const auto& key : distinct) {
    for (const auto& [country, members] : by_country(corpus, key)) {
      MapPoint p;
      p.disease_key = key;
      p.country = country;
      p.latitude = members.front()->location->latitude;
      p.longitude = members.front()->location->longitude;
      p.study_count = members.size();
      for (const auto* s : members) p.pmids.insert(s->pmid);
      out.push_back(std::move(p));
    }
  }
  return out;
}

StatsSnapshot stats_snapshot(const StoreSnapshot& corpus) {
  std::unordered_set<std::string> diseases;
  std::unordered_set<std::string> countries;
  for (const auto& row : corpus.summaries) {
    diseases.insert(row.summary.disease_key);
    if (row.summary.location) countries.insert(row.summary.location->country);
  }
  return {corpus.papers.size(), corpus.summaries.size(), diseases.size(), countries.size()};
}

std::vector<DrilldownPaper> drilldown(const StoreSnapshot& corpus, const DrilldownSelector& selector) {
  std::unordered_set<std::string> pmids;
  for (const auto& row : corpus.summaries) {
    const auto& s = row.summary;
    if (s.disease_key != selector.disease_key) continue;
    if (selector.country && (!s.location || s.location->country != *selector.country)) continue;
    pmids.insert(s.pmid);
  }

  std::vector<const PaperRecord*> papers;
  for (const auto& p : corpus.papers) {
    if (pmids.contains(p.pmid)) papers.push_back(&p);
  }
  std::sort(papers.begin(), papers.end(), [](const PaperRecord* a, const PaperRecord* b) {
    return paper_order(*a, *b);
  });

  std::vector<DrilldownPaper> out;
  out.reserve(papers.size());
  for (const auto* p : papers) out.push_back({p->pmid, p->title, p->pub_year, pubmed_url(p->pmid)});
  return out;
}

}  // namespace r0scope
