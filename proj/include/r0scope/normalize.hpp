#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "r0scope/extraction.hpp"
#include "r0scope/gazetteer.hpp"

namespace r0scope {

struct ConfidenceInterval {
  double level = 95;  // percent, in (0, 100]
  double low = 0;
  double high = 0;
  std::string raw;
  bool level_defaulted = false;  // no level in the text; 95 assumed

  bool operator==(const ConfidenceInterval&) const = default;
};

struct StructuredSummary {
  std::string pmid;
  std::string disease_raw;
  std::string disease_key;
  std::string location_raw;
  std::optional<ResolvedLocation> location;
  std::string date_raw;
  std::optional<int> date_year;
  double r0_min = 0;
  double r0_max = 0;
  std::optional<ConfidenceInterval> ci;
  std::string method_raw;

  bool operator==(const StructuredSummary&) const = default;
};

struct R0Range {
  double min = 0;
  double max = 0;

  bool operator==(const R0Range&) const = default;
};

// "2.5" -> {2.5, 2.5}; "2.2-3.5", "2.2–3.5", "2.2 to 3.5", "between 3.5 and
// 2.2" -> {2.2, 3.5}. Decimal commas are accepted. Throws Error(Unparseable)
// when no number is present and Error(NegativeValue) for negative values.
R0Range parse_r0(std::string_view text);

// Inverse of parse_r0 for valid ranges: "min-max", or "min" when equal.
std::string format_r0(R0Range range);

// Absent for empty/none/unknown text. Throws Error(Unparseable) when text is
// present but holds no low-high pair.
std::optional<ConfidenceInterval> parse_ci(std::string_view text);

std::string canonical_disease(std::string_view text);

// First standalone four-digit group, if any.
std::optional<int> parse_year_hint(std::string_view text);

// Throws NormalizationError when the R0 value cannot be parsed. Non-fatal
// issues (an unreadable CI) are appended to `warnings` when given.
StructuredSummary normalize_summary(const RawSummary& raw, const Gazetteer& gazetteer,
                                    std::vector<std::string>* warnings = nullptr);

}  // namespace r0scope
