#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "r0scope/ingest.hpp"

namespace r0scope {

class Gazetteer;

inline constexpr std::string_view kUnknown = "unknown";

// One six-property R0 contribution as the extractor reported it. Every slot is
// filled ("unknown" when not reported) except r0_value, which is never empty.
struct RawSummary {
  std::string pmid;
  std::string disease_name;
  std::string location;
  std::string date;
  std::string r0_value;
  std::string ci_values;
  std::string method;

  bool operator==(const RawSummary&) const = default;
};

struct ExtractorResponse {
  enum class Kind { Answerable, Unanswerable };

  std::string pmid;
  Kind kind = Kind::Unanswerable;
  std::vector<RawSummary> summaries;  // non-empty iff answerable
  std::string raw_text;

  bool answerable() const { return kind == Kind::Answerable; }
};

inline constexpr std::string_view kExtractionQuestion =
    "What are the values for the following properties of the basic reproduction number estimate "
    "(R0): disease name, location, date, R0 value, %CI values, and method?";

std::string build_prompt(const PaperRecord& paper);

// Tolerant reader for model output: the "unanswerable" sentinel, or the first
// balanced JSON object/array in the text. Throws Error(Unparseable) otherwise.
ExtractorResponse parse_response(std::string_view pmid, std::string_view text);

// Inverse of parse_response for answerable lists: a JSON array using the
// property names as keys.
std::string format_summaries_json(const std::vector<RawSummary>& summaries);

// Deterministic pattern-based extractor used offline and as a test oracle.
class RuleExtractor {
 public:
  // Disease lexicon defaults to the bundled list; location names come from the
  // gazetteer when one is given.
  explicit RuleExtractor(const Gazetteer* gazetteer = nullptr,
                         std::vector<std::string> disease_lexicon = default_disease_lexicon());

  ExtractorResponse extract(const PaperRecord& paper) const;

  static std::vector<std::string> default_disease_lexicon();

 private:
  std::vector<std::string> diseases_;   // longest first
  std::vector<std::string> locations_;  // longest first
};

ExtractorResponse rule_extract(const PaperRecord& paper, const Gazetteer* gazetteer = nullptr);

}  // namespace r0scope
