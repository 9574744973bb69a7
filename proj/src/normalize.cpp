#include "r0scope/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "r0scope/error.hpp"
#include "r0scope/text.hpp"

namespace r0scope {

namespace {

struct NumberToken {
  double value;
  std::size_t begin;  // includes a leading minus sign
  std::size_t end;
  bool percent;  // directly followed by '%'
};

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Lowercase ASCII and fold the Unicode dashes and minus sign to '-'.
std::string simplify(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text.substr(i, 3) == "\xE2\x80\x93" || text.substr(i, 3) == "\xE2\x80\x94" ||
        text.substr(i, 3) == "\xE2\x88\x92") {
      out += '-';
      i += 2;
      continue;
    }
    char c = text[i];
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

// Number tokens in `s` (already simplified). Digits glued to a word ("r0",
// "covid-19") are not numbers. A '-' directly before a number is a minus sign
// unless the previous non-space character is a digit (then it joins a range).
std::vector<NumberToken> tokenize_numbers(std::string_view s) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    bool glued = begin > 0 && (is_alpha(s[begin - 1]) || s[begin - 1] == '_' ||
                               (s[begin - 1] == '-' && begin > 1 && is_alpha(s[begin - 2])));
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    std::string digits(s.substr(i, j - i));
    if (j + 1 < s.size() && (s[j] == '.' || s[j] == ',') && is_digit(s[j + 1])) {
      std::size_t k = j + 1;
      while (k < s.size() && is_digit(s[k])) ++k;
      digits += '.';
      digits += s.substr(j + 1, k - j - 1);
      j = k;
    }
    i = j;
    if (glued) continue;

    double value = *parse_decimal(digits);
    if (begin > 0 && s[begin - 1] == '-') {
      std::size_t p = begin - 1;
      while (p > 0 && s[p - 1] == ' ') --p;
      bool joins_range = p > 0 && is_digit(s[p - 1]);
      if (!joins_range) {
        value = -value;
        --begin;
      }
    }
    std::size_t after = j;
    while (after < s.size() && s[after] == ' ') ++after;
    bool percent = after < s.size() && s[after] == '%';
    out.push_back({value, begin, j, percent});
  }
  return out;
}

std::string_view gap_between(std::string_view s, const NumberToken& a, const NumberToken& b) {
  return trim(s.substr(a.end, b.begin - a.end));
}

bool ends_with_word(std::string_view s, std::string_view word) {
  s = trim(s);
  if (s.size() < word.size() || s.substr(s.size() - word.size()) != word) return false;
  return s.size() == word.size() || !is_alpha(s[s.size() - word.size() - 1]);
}

bool is_absent_marker(std::string_view lowered) {
  static constexpr std::string_view kMarkers[] = {"", "none", "unknown", "n/a", "na", "not reported",
                                                  "not available", "null", "-"};
  return std::find(std::begin(kMarkers), std::end(kMarkers), lowered) != std::end(kMarkers);
}

}  // namespace

R0Range parse_r0(std::string_view text) {
  const std::string s = simplify(text);
  std::vector<NumberToken> tokens = tokenize_numbers(s);
  std::erase_if(tokens, [](const NumberToken& t) { return t.percent; });
  if (tokens.empty()) throw Error(ErrorCode::Unparseable, "no R0 number in \"" + std::string(text) + "\"");

  const NumberToken& first = tokens[0];
  double a = first.value;
  double b = a;
  if (tokens.size() > 1) {
    auto gap = gap_between(s, first, tokens[1]);
    bool between = ends_with_word(std::string_view(s).substr(0, first.begin), "between");
    if (gap == "-" || gap == "to" || gap == "~" || gap == "--" || (between && gap == "and")) {
      b = tokens[1].value;
    } else if (tokens[1].value < 0 && gap.empty()) {
      // "2.2 -3.5" style: the '-' was read as a sign but sits between two numbers.
      b = -tokens[1].value;
    }
  }
  if (a < 0 || b < 0) throw Error(ErrorCode::NegativeValue, "negative R0 in \"" + std::string(text) + "\"");
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::Unparseable, "non-finite R0 in \"" + std::string(text) + "\"");
  }
  return {std::min(a, b), std::max(a, b)};
}

std::string format_r0(R0Range range) {
  if (range.min == range.max) return format_decimal(range.min);
  return format_decimal(range.min) + "-" + format_decimal(range.max);
}

std::optional<ConfidenceInterval> parse_ci(std::string_view text) {
  const std::string s = simplify(trim(text));
  if (is_absent_marker(s)) return std::nullopt;

  std::vector<NumberToken> tokens = tokenize_numbers(s);
  ConfidenceInterval ci;
  ci.raw = std::string(trim(text));
  auto level_it = std::find_if(tokens.begin(), tokens.end(), [](const NumberToken& t) { return t.percent; });
  if (level_it != tokens.end()) {
    ci.level = level_it->value;
    tokens.erase(level_it);
    if (!(ci.level > 0 && ci.level <= 100)) {
      throw Error(ErrorCode::Unparseable, "CI level out of range in \"" + std::string(text) + "\"");
    }
  } else {
    ci.level = 95;
    ci.level_defaulted = true;
  }

  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    auto gap = gap_between(s, tokens[i], tokens[i + 1]);
    double lo = tokens[i].value;
    double hi = tokens[i + 1].value;
    bool connected = gap == "-" || gap == "to" || gap == "," || gap == ";" || gap == "and" || gap == "~" ||
                     gap == "--";
    if (!connected && gap.empty() && hi < 0) {
      hi = -hi;
      connected = true;
    }
    if (connected) {
      ci.low = std::min(lo, hi);
      ci.high = std::max(lo, hi);
      return ci;
    }
  }
  throw Error(ErrorCode::Unparseable, "no interval in \"" + std::string(text) + "\"");
}

std::string canonical_disease(std::string_view text) {
  std::string folded = fold_case(text);
  std::string out;
  bool pending_space = false;
  for (char c : folded) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  static constexpr std::string_view kTrailing = ".,;:!?";
  while (!out.empty() && (kTrailing.find(out.back()) != std::string_view::npos || out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

std::optional<int> parse_year_hint(std::string_view text) {
  for (std::size_t i = 0; i + 4 <= text.size(); ++i) {
    if (!is_digits(text.substr(i, 4))) continue;
    if (i > 0 && is_digit(text[i - 1])) continue;
    if (i + 4 < text.size() && is_digit(text[i + 4])) continue;
    return std::stoi(std::string(text.substr(i, 4)));
  }
  return std::nullopt;
}

StructuredSummary normalize_summary(const RawSummary& raw, const Gazetteer& gazetteer,
                                    std::vector<std::string>* warnings) {
  StructuredSummary out;
  out.pmid = raw.pmid;

  try {
    auto range = parse_r0(raw.r0_value);
    out.r0_min = range.min;
    out.r0_max = range.max;
  } catch (const Error& e) {
    throw NormalizationError(e.code(), "pmid " + raw.pmid + ": R0 value \"" + raw.r0_value + "\"");
  }

  try {
    out.ci = parse_ci(raw.ci_values);
  } catch (const Error& e) {
    out.ci.reset();
    if (warnings) warnings->push_back("pmid " + raw.pmid + ": CI ignored, " + e.what());
  }

  out.disease_raw = raw.disease_name;
  out.disease_key = canonical_disease(raw.disease_name);
  if (out.disease_key.empty()) out.disease_key = std::string(kUnknown);

  out.location_raw = raw.location;
  if (ascii_lower(trim(raw.location)) != kUnknown) out.location = resolve_location(raw.location, gazetteer);

  out.date_raw = raw.date;
  out.date_year = parse_year_hint(raw.date);
  out.method_raw = raw.method;
  return out;
}

}  // namespace r0scope
