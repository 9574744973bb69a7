#include "r0scope/pubmed.hpp"

#include <httplib.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "r0scope/endpoint.hpp"
#include "r0scope/error.hpp"

namespace r0scope {

namespace pt = boost::property_tree;

namespace {

// Text content of an element in document order, including inline markup
// such as <i> and <sup>.
std::string flatten(const pt::ptree& node) {
  std::string out;
  bool saw_text_child = false;
  for (const auto& [key, child] : node) {
    if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
    if (key == "<xmltext>") {
      out += child.data();
      saw_text_child = true;
    } else {
      out += flatten(child);
    }
  }
  if (!saw_text_child && out.empty()) out = node.data();
  return out;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      space = true;
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::string url_encode(std::string_view s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

std::optional<int> year_in(std::string_view s) {
  for (std::size_t i = 0; i + 4 <= s.size(); ++i) {
    if (is_digits(s.substr(i, 4))) {
      int y = std::stoi(std::string(s.substr(i, 4)));
      if (y >= 1900 && y <= current_year() + 1) return y;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

RateLimiter::RateLimiter(double per_second)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(per_second > 0 ? 1.0 / per_second : 0.0))) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::vector<PaperRecord> parse_efetch_xml(std::string_view xml, Timestamp fetched_at) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree, pt::xml_parser::no_concat_text);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::SourceUnavailable, std::string("malformed efetch XML: ") + e.what());
  }

  std::vector<PaperRecord> out;
  auto set = tree.get_child_optional("PubmedArticleSet");
  if (!set) return out;
  for (const auto& [key, article] : *set) {
    if (key != "PubmedArticle") continue;
    auto citation = article.get_child_optional("MedlineCitation");
    if (!citation) continue;
    PaperRecord rec;
    if (auto pmid = citation->get_child_optional("PMID")) rec.pmid = collapse_spaces(flatten(*pmid));
    auto art = citation->get_child_optional("Article");
    if (!art) continue;
    if (auto title = art->get_child_optional("ArticleTitle")) rec.title = collapse_spaces(flatten(*title));
    if (auto abs = art->get_child_optional("Abstract")) {
      std::string text;
      for (const auto& [k, part] : *abs) {
        if (k != "AbstractText") continue;
        std::string piece = collapse_spaces(flatten(part));
        if (auto label = part.get_optional<std::string>("<xmlattr>.Label")) piece = *label + ": " + piece;
        if (!text.empty()) text += ' ';
        text += piece;
      }
      rec.abstract = text;
    }
    if (auto date = art->get_child_optional("Journal.JournalIssue.PubDate")) {
      if (auto medline = date->get_child_optional("MedlineDate")) {
        rec.pub_date_raw = collapse_spaces(flatten(*medline));
      } else {
        std::string raw;
        for (const char* part : {"Year", "Month", "Day"}) {
          if (auto v = date->get_child_optional(part)) {
            if (!raw.empty()) raw += ' ';
            raw += collapse_spaces(flatten(*v));
          }
        }
        rec.pub_date_raw = raw;
      }
      rec.pub_year = year_in(rec.pub_date_raw);
    }
    rec.fetched_at = fetched_at;
    if (!is_digits(rec.pmid) || rec.title.empty()) continue;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<std::string> parse_esearch_json(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::SourceUnavailable, "esearch returned malformed JSON");
  std::vector<std::string> ids;
  auto result = j.find("esearchresult");
  if (result == j.end()) throw Error(ErrorCode::SourceUnavailable, "esearch response lacks esearchresult");
  for (const auto& id : result->value("idlist", nlohmann::json::array())) ids.push_back(id.get<std::string>());
  return ids;
}

std::string format_query_date(Timestamp t) {
  auto ymd = std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(t)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d/%02u/%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

PubMedClient::PubMedClient(PubMedConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_second) {}

std::string PubMedClient::get(const std::string& path, const std::string& query) {
  auto url = parse_url(config_.base_url);
  std::string full = url.path;
  if (full.empty() || full.back() != '/') full += '/';
  full += path + "?" + query + "&tool=" + url_encode(config_.tool);
  if (config_.email) full += "&email=" + url_encode(*config_.email);
  if (config_.api_key) full += "&api_key=" + url_encode(*config_.api_key);

  limiter_.acquire();
  httplib::Client client(url.scheme_host_port);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  auto res = client.Get(full);
  if (!res) {
    throw Error(ErrorCode::SourceUnavailable, config_.base_url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::SourceUnavailable, config_.base_url + "/" + path + " answered " +
                                                  std::to_string(res->status));
  }
  return res->body;
}

std::vector<std::string> PubMedClient::search(const std::string& term) {
  auto body = get("esearch.fcgi", "db=pubmed&retmode=json&retmax=" + std::to_string(config_.max_results) +
                                      "&term=" + url_encode(term));
  return parse_esearch_json(body);
}

std::vector<PaperRecord> PubMedClient::fetch(const std::vector<std::string>& pmids) {
  std::vector<PaperRecord> out;
  const auto fetched_at = now_utc();
  for (std::size_t i = 0; i < pmids.size(); i += config_.fetch_chunk) {
    std::string ids;
    for (std::size_t k = i; k < std::min(pmids.size(), i + config_.fetch_chunk); ++k) {
      if (!ids.empty()) ids += ',';
      ids += pmids[k];
    }
    auto body = get("efetch.fcgi", "db=pubmed&retmode=xml&rettype=abstract&id=" + ids);
    auto batch = parse_efetch_xml(body, fetched_at);
    out.insert(out.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
  }
  return out;
}

std::vector<PaperRecord> PubMedClient::fetch_window(std::optional<Timestamp> since, Timestamp until) {
  std::optional<DateWindow> window;
  if (since) window = DateWindow{format_query_date(*since), format_query_date(until)};
  return fetch(search(build_search_query(window)));
}

}  // namespace r0scope
