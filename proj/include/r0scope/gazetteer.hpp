#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace r0scope {

struct ResolvedLocation {
  std::string canonical_name;
  std::string country;
  std::string iso2;
  double latitude = 0;
  double longitude = 0;
  std::string continent;  // AF, AN, AS, EU, NA, OC, SA

  bool operator==(const ResolvedLocation&) const = default;
};

bool is_continent_code(std::string_view code);

// Offline place-name table. Loaded once, then shared read-only.
//
// File format: UTF-8 TSV with the header
//   canonical_name  country  iso2  latitude  longitude  continent  aliases
// where aliases is a '|'-separated list (may be empty).
class Gazetteer {
 public:
  Gazetteer() = default;

  static Gazetteer load_file(const std::string& path);
  static Gazetteer parse(std::string_view tsv);

  // Case-insensitive lookup of the whole string, then of its comma-separated
  // segments from right to left.
  std::optional<ResolvedLocation> resolve(std::string_view text) const;

  // Exact (case-insensitive) lookup of one name or alias.
  std::optional<ResolvedLocation> lookup(std::string_view name) const;

  const std::vector<ResolvedLocation>& entries() const { return entries_; }

  // Every canonical name and alias, as written in the file.
  std::vector<std::string> names() const;

  std::size_t size() const { return entries_.size(); }

 private:
  void add(ResolvedLocation loc, const std::vector<std::string>& aliases);

  std::vector<ResolvedLocation> entries_;
  std::vector<std::vector<std::string>> aliases_;
  std::unordered_map<std::string, std::size_t> index_;  // folded name -> entry
};

std::optional<ResolvedLocation> resolve_location(std::string_view text, const Gazetteer& gazetteer);

}  // namespace r0scope
