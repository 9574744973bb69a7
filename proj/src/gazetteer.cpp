#include "r0scope/gazetteer.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "r0scope/error.hpp"
#include "r0scope/text.hpp"

namespace r0scope {

namespace {

constexpr std::array<std::string_view, 7> kContinents = {"AF", "AN", "AS", "EU", "NA", "OC", "SA"};
constexpr std::array<std::string_view, 7> kColumns = {
    "canonical_name", "country", "iso2", "latitude", "longitude", "continent", "aliases"};

std::string key_of(std::string_view name) {
  // Fold case and collapse whitespace runs.
  std::string folded = fold_case(trim(name));
  std::string out;
  bool space = false;
  for (char c : folded) {
    if (c == ' ' || c == '\t') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

}  // namespace

bool is_continent_code(std::string_view code) {
  for (auto c : kContinents) {
    if (c == code) return true;
  }
  return false;
}

Gazetteer Gazetteer::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::GazetteerFormat, "cannot open gazetteer file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Gazetteer Gazetteer::parse(std::string_view tsv) {
  if (tsv.starts_with("\xEF\xBB\xBF")) tsv.remove_prefix(3);
  if (!is_valid_utf8(tsv)) throw Error(ErrorCode::GazetteerFormat, "gazetteer is not valid UTF-8");

  Gazetteer g;
  auto lines = split(tsv, '\n');
  bool header_seen = false;
  std::size_t line_no = 0;
  for (auto line : lines) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    auto cols = split(line, '\t');
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::GazetteerFormat, "line " + std::to_string(line_no) + ": " + why);
    };
    if (!header_seen) {
      if (cols.size() != kColumns.size()) fail("header must have 7 columns");
      for (std::size_t i = 0; i < kColumns.size(); ++i) {
        if (trim(cols[i]) != kColumns[i]) fail("expected header column " + std::string(kColumns[i]));
      }
      header_seen = true;
      continue;
    }
    if (cols.size() < 6 || cols.size() > 7) fail("expected 7 columns");
    ResolvedLocation loc;
    loc.canonical_name = std::string(trim(cols[0]));
    loc.country = std::string(trim(cols[1]));
    loc.iso2 = std::string(trim(cols[2]));
    auto lat = parse_decimal(cols[3]);
    auto lon = parse_decimal(cols[4]);
    loc.continent = std::string(trim(cols[5]));
    if (loc.canonical_name.empty() || loc.country.empty()) fail("empty name");
    if (loc.iso2.size() != 2 || !std::isupper(static_cast<unsigned char>(loc.iso2[0])) ||
        !std::isupper(static_cast<unsigned char>(loc.iso2[1]))) {
      fail("iso2 must be two uppercase letters");
    }
    if (!lat || !lon || *lat < -90 || *lat > 90 || *lon < -180 || *lon > 180) fail("bad coordinates");
    loc.latitude = *lat;
    loc.longitude = *lon;
    if (!is_continent_code(loc.continent)) fail("unknown continent code " + loc.continent);

    std::vector<std::string> aliases;
    if (cols.size() == 7) {
      for (auto a : split(cols[6], '|')) {
        if (!trim(a).empty()) aliases.emplace_back(trim(a));
      }
    }
    g.add(std::move(loc), aliases);
  }
  if (!header_seen) throw Error(ErrorCode::GazetteerFormat, "missing header row");
  return g;
}

void Gazetteer::add(ResolvedLocation loc, const std::vector<std::string>& aliases) {
  const std::size_t idx = entries_.size();
  // First definition of a name wins.
  index_.emplace(key_of(loc.canonical_name), idx);
  for (const auto& a : aliases) index_.emplace(key_of(a), idx);
  entries_.push_back(std::move(loc));
  aliases_.push_back(aliases);
}

std::optional<ResolvedLocation> Gazetteer::lookup(std::string_view name) const {
  auto key = key_of(name);
  if (key.empty()) return std::nullopt;
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second];
}

std::optional<ResolvedLocation> Gazetteer::resolve(std::string_view text) const {
  if (auto hit = lookup(text)) return hit;
  auto segments = split(text, ',');
  if (segments.size() < 2) return std::nullopt;
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    if (auto hit = lookup(*it)) return hit;
  }
  return std::nullopt;
}

std::vector<std::string> Gazetteer::names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out.push_back(entries_[i].canonical_name);
    for (const auto& a : aliases_[i]) out.push_back(a);
  }
  return out;
}

std::optional<ResolvedLocation> resolve_location(std::string_view text, const Gazetteer& gazetteer) {
  return gazetteer.resolve(text);
}

}  // namespace r0scope
