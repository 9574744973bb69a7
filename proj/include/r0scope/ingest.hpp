#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "r0scope/text.hpp"

namespace r0scope {

// One retrieved publication.
struct PaperRecord {
  std::string pmid;
  std::string title;
  std::string abstract;
  std::string pub_date_raw;
  std::optional<int> pub_year;
  Timestamp fetched_at{};

  bool operator==(const PaperRecord&) const = default;
};

std::string pubmed_url(std::string_view pmid);

// Inclusive publication/entry date window, each bound as YYYY/MM/DD.
struct DateWindow {
  std::string from;
  std::string to;
};

std::string build_search_query(const std::optional<DateWindow>& window = std::nullopt);

// Header names holding each exported field. An empty date column means the
// publication-year column doubles as the raw date.
struct ColumnMapping {
  std::string pmid = "PMID";
  std::string title = "Title";
  std::string abstract = "Abstract";
  std::string publication_year = "Publication Year";
  std::string publication_date;

  static ColumnMapping from_json_file(const std::string& path);
};

struct RowError {
  std::size_t row = 0;  // 1-based record number; the header is row 1
  std::string reason;

  bool operator==(const RowError&) const = default;
};

struct CsvParseResult {
  std::vector<PaperRecord> records;
  std::vector<RowError> errors;
};

// RFC 4180 reader. Fields may be quoted; quoted fields may contain separators,
// doubled quotes and line breaks. Records that are entirely empty are skipped.
std::vector<std::vector<std::string>> read_csv(std::string_view bytes);

CsvParseResult parse_pubmed_csv(std::string_view bytes, const ColumnMapping& mapping = {},
                                Timestamp fetched_at = now_utc());

std::vector<PaperRecord> dedup_against_store(const std::vector<PaperRecord>& records,
                                             const std::set<std::string, std::less<>>& known_pmids);

}  // namespace r0scope
