#include "r0scope/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <regex>

#include "r0scope/error.hpp"
#include "r0scope/gazetteer.hpp"

namespace r0scope {

namespace {

using nlohmann::json;

enum class Slot { Disease, Location, Date, R0, Ci, Method, None };

Slot slot_for_key(std::string_view key) {
  std::string k;
  for (char c : key) {
    if (c == ' ' || c == '_' || c == '-' || c == '%' || c == '.') continue;
    k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (k == "diseasename" || k == "disease") return Slot::Disease;
  if (k == "location") return Slot::Location;
  if (k == "date") return Slot::Date;
  if (k == "r0value" || k == "r0values" || k == "r0") return Slot::R0;
  if (k == "civalues" || k == "civalue" || k == "ci") return Slot::Ci;
  if (k == "method") return Slot::Method;
  return Slot::None;
}

std::string value_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

std::optional<RawSummary> summary_from_object(std::string_view pmid, const json& obj) {
  if (!obj.is_object()) return std::nullopt;
  RawSummary s;
  s.pmid = std::string(pmid);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string text = value_text(it.value());
    switch (slot_for_key(it.key())) {
      case Slot::Disease: s.disease_name = std::move(text); break;
      case Slot::Location: s.location = std::move(text); break;
      case Slot::Date: s.date = std::move(text); break;
      case Slot::R0: s.r0_value = std::move(text); break;
      case Slot::Ci: s.ci_values = std::move(text); break;
      case Slot::Method: s.method = std::move(text); break;
      case Slot::None: break;
    }
  }
  if (trim(s.r0_value).empty()) return std::nullopt;
  for (auto* field : {&s.disease_name, &s.location, &s.date, &s.ci_values, &s.method}) {
    if (trim(*field).empty()) *field = std::string(kUnknown);
  }
  return s;
}

bool is_unanswerable_sentinel(std::string_view text) {
  std::string letters;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      letters += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return letters == "unanswerable";
}

// End index (exclusive) of the bracketed value starting at `start`, honouring
// JSON string literals, or npos when unbalanced.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      stack.push_back(c == '{' ? '}' : ']');
    } else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::string_view::npos;
      stack.pop_back();
      if (stack.empty()) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<json> first_json_value(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{' && text[i] != '[') continue;
    auto end = balanced_end(text, i);
    if (end == std::string_view::npos) continue;
    auto parsed = json::parse(text.substr(i, end - i), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded()) return parsed;
  }
  return std::nullopt;
}

}  // namespace

std::string build_prompt(const PaperRecord& paper) {
  std::string prompt(kExtractionQuestion);
  prompt += "\n\ntitle: ";
  prompt += paper.title;
  prompt += "\nabstract: ";
  prompt += paper.abstract;
  return prompt;
}

ExtractorResponse parse_response(std::string_view pmid, std::string_view text) {
  ExtractorResponse resp;
  resp.pmid = std::string(pmid);
  resp.raw_text = std::string(text);
  if (is_unanswerable_sentinel(trim(text))) return resp;

  auto value = first_json_value(text);
  if (!value) throw Error(ErrorCode::Unparseable, "no JSON value in response for pmid " + std::string(pmid));

  if (value->is_object()) {
    if (auto s = summary_from_object(pmid, *value)) resp.summaries.push_back(std::move(*s));
  } else {
    for (const auto& element : *value) {
      if (auto s = summary_from_object(pmid, element)) resp.summaries.push_back(std::move(*s));
    }
  }
  if (!resp.summaries.empty()) resp.kind = ExtractorResponse::Kind::Answerable;
  return resp;
}

std::string format_summaries_json(const std::vector<RawSummary>& summaries) {
  json arr = json::array();
  for (const auto& s : summaries) {
    arr.push_back(json{{"disease name", s.disease_name},
                       {"location", s.location},
                       {"date", s.date},
                       {"R0 value", s.r0_value},
                       {"%CI values", s.ci_values},
                       {"method", s.method}});
  }
  return arr.dump();
}

// ---------------------------------------------------------------------------
// Rule-based extractor

namespace {

const std::regex& r0_mention_re() {
  static const std::regex re(
      R"((^|[^A-Za-z0-9])(R0|R_0|R\(0\)|R₀|basic reproduct(ion|ive) (number|ratio|rate)))",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& ci_re() {
  static const std::regex re(
      R"((\d+(?:\.\d+)?)\s*%\s*(?:CI|CrI|confidence interval|credible interval)s?\s*[:,=]?\s*(?:of\s+|was\s+)?\(?\s*(\d+(?:[.,]\d+)?)\s*(?:-|–|—|to|,)\s*(\d+(?:[.,]\d+)?))",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& number_re() {
  static const std::regex re(R"(\d+(?:[.,]\d+)?)");
  return re;
}

const std::regex& range_tail_re() {
  static const std::regex re(R"(^\s*(?:-|–|—|to)\s*(\d+(?:[.,]\d+)?))", std::regex::icase);
  return re;
}

const std::regex& between_tail_re() {
  static const std::regex re(R"(^\s+and\s+(\d+(?:[.,]\d+)?))", std::regex::icase);
  return re;
}

const std::regex& date_re() {
  static const std::regex re(
      R"(\b(?:(?:January|February|March|April|May|June|July|August|September|October|November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec)\.?\s+(?:\d{1,2},?\s+)?(?:19|20)\d{2}|(?:19|20)\d{2}(?:\s*(?:-|–|to)\s*(?:19|20)\d{2})?)\b)");
  return re;
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool is_year_token(std::string_view tok) {
  if (tok.size() != 4 || !is_digits(tok)) return false;
  int y = std::stoi(std::string(tok));
  return y >= 1900 && y <= 2100;
}

// A number token usable as an R0 value: not glued to a word ("R0",
// "COVID-19"), not a percentage, not a year.
bool plausible_value(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos > 0) {
    char prev = text[pos - 1];
    if (is_alnum(prev) || prev == '.') return false;
    if (prev == '-' && pos > 1 && std::isalpha(static_cast<unsigned char>(text[pos - 2]))) return false;
  }
  std::size_t after = pos + len;
  while (after < text.size() && text[after] == ' ') ++after;
  if (after < text.size() && text[after] == '%') return false;
  if (pos + len < text.size() && std::isalpha(static_cast<unsigned char>(text[pos + len]))) return false;
  return !is_year_token(text.substr(pos, len));
}

// Earliest, then longest, whole-word occurrence of any term.
std::optional<std::pair<std::size_t, std::size_t>> find_term(std::string_view haystack,
                                                             const std::vector<std::string>& terms) {
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (const auto& term : terms) {
    if (term.empty()) continue;
    std::size_t from = 0;
    while (true) {
      auto pos = haystack.find(term, from);
      if (pos == std::string_view::npos) break;
      bool left_ok = pos == 0 || !is_alnum(haystack[pos - 1]);
      std::size_t end = pos + term.size();
      bool right_ok = end >= haystack.size() || !is_alnum(haystack[end]);
      if (left_ok && right_ok) {
        if (!best || pos < best->first || (pos == best->first && term.size() > best->second)) {
          best = {pos, term.size()};
        }
        break;
      }
      from = pos + 1;
    }
  }
  return best;
}

struct CiSpan {
  std::size_t begin;
  std::size_t end;
};

}  // namespace

RuleExtractor::RuleExtractor(const Gazetteer* gazetteer, std::vector<std::string> disease_lexicon)
    : diseases_(std::move(disease_lexicon)) {
  for (auto& d : diseases_) d = ascii_lower(d);
  if (gazetteer != nullptr) locations_ = gazetteer->names();
  auto by_length = [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  };
  std::sort(diseases_.begin(), diseases_.end(), by_length);
  std::sort(locations_.begin(), locations_.end(), by_length);
}

std::vector<std::string> RuleExtractor::default_disease_lexicon() {
  return {"covid-19", "covid19", "sars-cov-2", "dengue", "influenza", "hiv", "sars", "mers-cov",
          "mers", "cholera", "zika", "zika virus", "african swine fever", "ebola", "ebola virus disease",
          "measles", "hepatitis b", "hepatitis c", "hand, foot, and mouth disease",
          "hand, foot and mouth disease", "tuberculosis", "monkeypox", "mpox", "west nile virus",
          "malaria", "chikungunya", "yellow fever", "pertussis", "mumps", "rubella", "smallpox",
          "plague", "h1n1", "h7n9", "norovirus", "diphtheria", "lassa fever", "nipah", "rabies",
          "varicella", "scarlet fever", "foot-and-mouth disease", "rift valley fever", "typhoid"};
}

ExtractorResponse RuleExtractor::extract(const PaperRecord& paper) const {
  const std::string text = paper.title + "\n" + paper.abstract;

  // Mask confidence intervals so their bounds are never taken as R0 values.
  std::string masked = text;
  std::vector<CiSpan> cis;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), ci_re()); it != std::sregex_iterator(); ++it) {
    auto b = static_cast<std::size_t>(it->position(0));
    auto len = static_cast<std::size_t>(it->length(0));
    cis.push_back({b, b + len});
    std::fill(masked.begin() + static_cast<std::ptrdiff_t>(b),
              masked.begin() + static_cast<std::ptrdiff_t>(b + len), ' ');
  }

  std::vector<std::size_t> mention_ends;
  for (auto it = std::sregex_iterator(masked.begin(), masked.end(), r0_mention_re());
       it != std::sregex_iterator(); ++it) {
    mention_ends.push_back(static_cast<std::size_t>(it->position(2) + it->length(2)));
  }

  constexpr std::size_t kWindow = 120;
  constexpr std::size_t kCiWindow = 60;
  std::vector<std::pair<std::string, std::string>> values;  // (r0, ci)
  for (std::size_t m = 0; m < mention_ends.size(); ++m) {
    std::size_t start = mention_ends[m];
    std::size_t stop = std::min(masked.size(), start + kWindow);
    if (m + 1 < mention_ends.size()) stop = std::min(stop, mention_ends[m + 1]);
    auto sentence_end = masked.find(". ", start);
    if (sentence_end != std::string::npos) stop = std::min(stop, sentence_end);
    if (stop <= start) continue;

    std::string_view window(masked.data() + start, stop - start);
    std::string r0;
    std::size_t value_end = 0;
    std::match_results<std::string_view::const_iterator> num;
    auto first = window.begin();
    while (std::regex_search(first, window.end(), num, number_re())) {
      auto pos = static_cast<std::size_t>(num[0].first - window.begin());
      auto len = static_cast<std::size_t>(num.length(0));
      if (!plausible_value(window, pos, len)) {
        first = num[0].second;
        continue;
      }
      r0 = num.str(0);
      value_end = pos + len;
      std::string_view rest = window.substr(value_end);
      std::match_results<std::string_view::const_iterator> tail;
      std::string_view before = window.substr(0, pos);
      bool after_between = trim(before).size() >= 7 &&
                           ascii_lower(trim(before).substr(trim(before).size() - 7)) == "between";
      if (std::regex_search(rest.begin(), rest.end(), tail, range_tail_re()) ||
          (after_between && std::regex_search(rest.begin(), rest.end(), tail, between_tail_re()))) {
        r0 += "-" + tail.str(1);
        value_end += static_cast<std::size_t>(tail.length(0));
      }
      break;
    }
    if (r0.empty()) continue;

    std::string ci;
    const std::size_t abs_end = start + value_end;
    for (const auto& span : cis) {
      if (span.begin >= abs_end && span.begin <= abs_end + kCiWindow &&
          (m + 1 >= mention_ends.size() || span.begin < mention_ends[m + 1])) {
        ci = text.substr(span.begin, span.end - span.begin);
        break;
      }
    }
    bool duplicate = std::any_of(values.begin(), values.end(), [&](const auto& v) { return v.first == r0; });
    if (!duplicate) values.emplace_back(std::move(r0), std::move(ci));
  }

  ExtractorResponse resp;
  resp.pmid = paper.pmid;
  if (values.empty()) {
    resp.raw_text = "unanswerable";
    return resp;
  }

  const std::string lowered = ascii_lower(text);
  std::string disease(kUnknown);
  if (auto hit = find_term(lowered, diseases_)) disease = text.substr(hit->first, hit->second);
  std::string location(kUnknown);
  if (auto hit = find_term(text, locations_)) location = text.substr(hit->first, hit->second);
  std::string date(kUnknown);
  std::smatch dm;
  if (std::regex_search(text, dm, date_re())) date = dm.str(0);

  for (auto& [r0, ci] : values) {
    RawSummary s;
    s.pmid = paper.pmid;
    s.disease_name = disease;
    s.location = location;
    s.date = date;
    s.r0_value = r0;
    s.ci_values = ci.empty() ? std::string(kUnknown) : ci;
    s.method = std::string(kUnknown);
    resp.summaries.push_back(std::move(s));
  }
  resp.kind = ExtractorResponse::Kind::Answerable;
  resp.raw_text = format_summaries_json(resp.summaries);
  return resp;
}

ExtractorResponse rule_extract(const PaperRecord& paper, const Gazetteer* gazetteer) {
  return RuleExtractor(gazetteer).extract(paper);
}

}  // namespace r0scope
