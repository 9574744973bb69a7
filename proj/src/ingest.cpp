#include "r0scope/ingest.hpp"

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "r0scope/error.hpp"

namespace r0scope {

namespace {

constexpr std::string_view kBaseQuery =
    "(basic reproduction number[TIAB] OR basic reproductive number[TIAB] OR basic reproduction "
    "ratio[TIAB] OR basic reproductive rate[TIAB] OR basic reproductive ratio[TIAB] OR basic "
    "reproduction rate[TIAB] OR R0[TIAB]) NOT (R0 resection OR cancer)";

bool is_blank_record(const std::vector<std::string>& fields) {
  for (const auto& f : fields) {
    if (!trim(f).empty()) return false;
  }
  return true;
}

std::optional<int> parse_year(std::string_view text) {
  // First run of four digits, e.g. "2020", "2020 Mar 3", "2020/03/03".
  for (std::size_t i = 0; i + 4 <= text.size(); ++i) {
    if (!is_digits(text.substr(i, 4))) continue;
    if (i > 0 && is_digits(text.substr(i - 1, 1))) continue;
    if (i + 4 < text.size() && is_digits(text.substr(i + 4, 1))) continue;
    int year = std::stoi(std::string(text.substr(i, 4)));
    if (year >= 1900 && year <= current_year() + 1) return year;
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::string pubmed_url(std::string_view pmid) {
  return "https://pubmed.ncbi.nlm.nih.gov/" + std::string(pmid) + "/";
}

std::string build_search_query(const std::optional<DateWindow>& window) {
  std::string query(kBaseQuery);
  if (window) {
    query += " AND (\"" + window->from + "\"[EDAT] : \"" + window->to + "\"[EDAT])";
  }
  return query;
}

ColumnMapping ColumnMapping::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open mapping file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "mapping file " + path + ": " + e.what());
  }
  ColumnMapping m;
  m.pmid = j.value("pmid", m.pmid);
  m.title = j.value("title", m.title);
  m.abstract = j.value("abstract", m.abstract);
  m.publication_year = j.value("publication_year", m.publication_year);
  m.publication_date = j.value("publication_date", m.publication_date);
  return m;
}

std::vector<std::vector<std::string>> read_csv(std::string_view bytes) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool record_open = false;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!is_blank_record(fields) || fields.size() > 1) records.push_back(std::move(fields));
    fields.clear();
    record_open = false;
  };

  for (std::size_t i = 0; i < bytes.size(); ++i) {
    char c = bytes[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    record_open = true;
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field += c;  // stray quote inside an unquoted field, kept verbatim
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < bytes.size() && bytes[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (record_open || in_quotes || !field.empty()) end_record();

  // Drop records made only of an empty line ("" parsed as one empty field).
  std::erase_if(records, [](const auto& r) { return r.size() == 1 && r[0].empty(); });
  return records;
}

CsvParseResult parse_pubmed_csv(std::string_view bytes, const ColumnMapping& mapping,
                                Timestamp fetched_at) {
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  if (!is_valid_utf8(bytes)) throw Error(ErrorCode::EncodingError, "input is not valid UTF-8");

  CsvParseResult result;
  auto rows = read_csv(bytes);
  if (rows.empty()) throw Error(ErrorCode::MissingHeader, "no header row");

  std::map<std::string, std::size_t, std::less<>> header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    header.emplace(std::string(trim(rows[0][i])), i);
  }
  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    auto it = header.find(name);
    if (it == header.end()) {
      if (required) throw Error(ErrorCode::MissingHeader, "column \"" + name + "\" not in header");
      return std::nullopt;
    }
    return it->second;
  };
  const auto pmid_col = *column(mapping.pmid, true);
  const auto title_col = *column(mapping.title, true);
  const auto abstract_col = *column(mapping.abstract, true);
  const auto year_col = *column(mapping.publication_year, true);
  const auto date_col = column(mapping.publication_date, true);

  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t row_number = r + 1;
    auto get = [&](std::size_t col) -> std::string_view {
      return col < row.size() ? std::string_view(row[col]) : std::string_view{};
    };

    std::string pmid(trim(get(pmid_col)));
    std::string title(trim(get(title_col)));
    if (pmid.empty()) {
      result.errors.push_back({row_number, "missing PMID"});
      continue;
    }
    if (!is_digits(pmid)) {
      result.errors.push_back({row_number, "invalid PMID \"" + pmid + "\""});
      continue;
    }
    if (title.empty()) {
      result.errors.push_back({row_number, "missing title"});
      continue;
    }
    if (!seen.insert(pmid).second) {
      result.errors.push_back({row_number, "duplicate PMID " + pmid});
      continue;
    }

    PaperRecord rec;
    rec.pmid = std::move(pmid);
    rec.title = std::move(title);
    rec.abstract = std::string(trim(get(abstract_col)));
    rec.pub_date_raw = std::string(trim(date_col ? get(*date_col) : get(year_col)));
    rec.pub_year = parse_year(trim(get(year_col)));
    rec.fetched_at = fetched_at;
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<PaperRecord> dedup_against_store(const std::vector<PaperRecord>& records,
                                             const std::set<std::string, std::less<>>& known_pmids) {
  std::vector<PaperRecord> out;
  for (const auto& rec : records) {
    if (!known_pmids.contains(rec.pmid)) out.push_back(rec);
  }
  return out;
}

}  // namespace r0scope
