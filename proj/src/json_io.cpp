#include "r0scope/json_io.hpp"

#include "r0scope/error.hpp"

namespace r0scope {

using nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

json pmid_array(const PmidSet& pmids) { return json(std::vector<std::string>(pmids.begin(), pmids.end())); }

}  // namespace

void to_json(json& j, const PaperRecord& p) {
  j = json{{"pmid", p.pmid},
           {"title", p.title},
           {"abstract", p.abstract},
           {"pub_date_raw", p.pub_date_raw},
           {"pub_year", optional_json(p.pub_year)},
           {"fetched_at", format_timestamp(p.fetched_at)}};
}

void from_json(const json& j, PaperRecord& p) {
  p.pmid = j.at("pmid").get<std::string>();
  p.title = j.at("title").get<std::string>();
  p.abstract = j.value("abstract", "");
  p.pub_date_raw = j.value("pub_date_raw", "");
  p.pub_year = optional_from<int>(j, "pub_year");
  auto ts = parse_timestamp(j.value("fetched_at", ""));
  p.fetched_at = ts.value_or(Timestamp{});
}

void to_json(json& j, const RawSummary& s) {
  j = json{{"pmid", s.pmid},         {"disease_name", s.disease_name}, {"location", s.location},
           {"date", s.date},         {"r0_value", s.r0_value},         {"ci_values", s.ci_values},
           {"method", s.method}};
}

void from_json(const json& j, RawSummary& s) {
  s.pmid = j.at("pmid").get<std::string>();
  s.disease_name = j.value("disease_name", std::string(kUnknown));
  s.location = j.value("location", std::string(kUnknown));
  s.date = j.value("date", std::string(kUnknown));
  s.r0_value = j.at("r0_value").get<std::string>();
  s.ci_values = j.value("ci_values", std::string(kUnknown));
  s.method = j.value("method", std::string(kUnknown));
}

void to_json(json& j, const ExtractorResponse& r) {
  j = json{{"pmid", r.pmid},
           {"kind", r.answerable() ? "answerable" : "unanswerable"},
           {"summaries", r.summaries},
           {"raw_text", r.raw_text}};
}

void from_json(const json& j, ExtractorResponse& r) {
  r.pmid = j.at("pmid").get<std::string>();
  r.kind = j.at("kind").get<std::string>() == "answerable" ? ExtractorResponse::Kind::Answerable
                                                           : ExtractorResponse::Kind::Unanswerable;
  r.summaries = j.value("summaries", std::vector<RawSummary>{});
  r.raw_text = j.value("raw_text", "");
  if (r.answerable() && r.summaries.empty()) {
    throw Error(ErrorCode::Unparseable, "answerable response for pmid " + r.pmid + " has no summaries");
  }
}

void to_json(json& j, const ResolvedLocation& l) {
  j = json{{"canonical_name", l.canonical_name}, {"country", l.country},     {"iso2", l.iso2},
           {"latitude", l.latitude},             {"longitude", l.longitude}, {"continent", l.continent}};
}

void from_json(const json& j, ResolvedLocation& l) {
  l.canonical_name = j.at("canonical_name").get<std::string>();
  l.country = j.at("country").get<std::string>();
  l.iso2 = j.at("iso2").get<std::string>();
  l.latitude = j.at("latitude").get<double>();
  l.longitude = j.at("longitude").get<double>();
  l.continent = j.at("continent").get<std::string>();
}

void to_json(json& j, const ConfidenceInterval& ci) {
  j = json{{"level", ci.level},
           {"low", ci.low},
           {"high", ci.high},
           {"raw", ci.raw},
           {"level_defaulted", ci.level_defaulted}};
}

void from_json(const json& j, ConfidenceInterval& ci) {
  ci.level = j.at("level").get<double>();
  ci.low = j.at("low").get<double>();
  ci.high = j.at("high").get<double>();
  ci.raw = j.value("raw", "");
  ci.level_defaulted = j.value("level_defaulted", false);
}

void to_json(json& j, const StructuredSummary& s) {
  j = json{{"pmid", s.pmid},
           {"disease_raw", s.disease_raw},
           {"disease_key", s.disease_key},
           {"location_raw", s.location_raw},
           {"location", optional_json(s.location)},
           {"date_raw", s.date_raw},
           {"date_year", optional_json(s.date_year)},
           {"r0_min", s.r0_min},
           {"r0_max", s.r0_max},
           {"ci", optional_json(s.ci)},
           {"method_raw", s.method_raw}};
}

void from_json(const json& j, StructuredSummary& s) {
  s.pmid = j.at("pmid").get<std::string>();
  s.disease_raw = j.value("disease_raw", "");
  s.disease_key = j.at("disease_key").get<std::string>();
  s.location_raw = j.value("location_raw", "");
  s.location = optional_from<ResolvedLocation>(j, "location");
  s.date_raw = j.value("date_raw", "");
  s.date_year = optional_from<int>(j, "date_year");
  s.r0_min = j.at("r0_min").get<double>();
  s.r0_max = j.at("r0_max").get<double>();
  s.ci = optional_from<ConfidenceInterval>(j, "ci");
  s.method_raw = j.value("method_raw", "");
}

void to_json(json& j, const StoredSummary& s) {
  to_json(j, s.summary);
  j["content_hash"] = s.content_hash;
}

void to_json(json& j, const RowError& e) { j = json{{"row", e.row}, {"reason", e.reason}}; }

void to_json(json& j, const UpsertReport& r) {
  j = json{{"papers_new", r.papers_new},
           {"papers_existing", r.papers_existing},
           {"summaries_new", r.summaries_new},
           {"summaries_existing", r.summaries_existing}};
}

void to_json(json& j, const DiseaseMaxR0Row& r) {
  j = json{{"disease_key", r.disease_key}, {"max_r0", r.max_r0},           {"mean_r0", r.mean_r0},
           {"median_r0", r.median_r0},     {"study_count", r.study_count}, {"pmids", pmid_array(r.pmids)}};
}

void to_json(json& j, const LocationStudyCountRow& r) {
  j = json{{"country", r.country}, {"study_count", r.study_count}, {"pmids", pmid_array(r.pmids)}};
}

void to_json(json& j, const LocationR0RangeRow& r) {
  j = json{{"country", r.country}, {"min_r0", r.min_r0}, {"max_r0", r.max_r0}, {"pmids", pmid_array(r.pmids)}};
}

void to_json(json& j, const MapPoint& p) {
  j = json{{"disease_key", p.disease_key}, {"country", p.country},         {"latitude", p.latitude},
           {"longitude", p.longitude},     {"study_count", p.study_count}, {"pmids", pmid_array(p.pmids)}};
}

void to_json(json& j, const StatsSnapshot& s) {
  j = json{{"total_papers", s.total_papers},
           {"total_summaries", s.total_summaries},
           {"distinct_diseases", s.distinct_diseases},
           {"distinct_locations", s.distinct_locations}};
}

void to_json(json& j, const DrilldownPaper& p) {
  j = json{{"pmid", p.pmid}, {"title", p.title}, {"pub_year", optional_json(p.pub_year)}, {"pubmed_url", p.pubmed_url}};
}

std::vector<json> read_ndjson(std::string_view text) {
  std::vector<json> out;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw Error(ErrorCode::Unparseable, "line " + std::to_string(line_no) + " is not valid JSON");
    }
    out.push_back(std::move(parsed));
  }
  return out;
}

}  // namespace r0scope
