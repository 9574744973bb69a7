#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace r0scope {

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::time_point<Clock, std::chrono::seconds>;

std::string_view trim(std::string_view s);
std::string ascii_lower(std::string_view s);

// Lowercases ASCII plus the Latin-1 supplement and Latin Extended-A blocks,
// which covers the accented letters found in place names.
std::string fold_case(std::string_view s);

bool is_valid_utf8(std::string_view s);
bool is_digits(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

// Numeric order for digit strings ("9" < "10"), lexicographic otherwise.
bool pmid_less(std::string_view a, std::string_view b);

// Shortest fixed-notation text that round-trips through parse_decimal.
std::string format_decimal(double value);
std::optional<double> parse_decimal(std::string_view s);

Timestamp now_utc();
std::string format_timestamp(Timestamp t);  // YYYY-MM-DDTHH:MM:SSZ
std::optional<Timestamp> parse_timestamp(std::string_view s);
int current_year();

std::string sha256_hex(std::string_view data);

}  // namespace r0scope
