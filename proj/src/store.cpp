#include "r0scope/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "r0scope/error.hpp"
#include "r0scope/text.hpp"

namespace r0scope {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS papers (
  pmid TEXT PRIMARY KEY,
  title TEXT NOT NULL,
  abstract TEXT NOT NULL,
  pub_date_raw TEXT NOT NULL,
  pub_year INTEGER,
  fetched_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS summaries (
  pmid TEXT NOT NULL REFERENCES papers(pmid),
  content_hash TEXT NOT NULL,
  disease_raw TEXT NOT NULL,
  disease_key TEXT NOT NULL,
  location_raw TEXT NOT NULL,
  loc_name TEXT,
  loc_country TEXT,
  loc_iso2 TEXT,
  loc_lat REAL,
  loc_lon REAL,
  loc_continent TEXT,
  date_raw TEXT NOT NULL,
  date_year INTEGER,
  r0_min REAL NOT NULL,
  r0_max REAL NOT NULL,
  ci_level REAL,
  ci_low REAL,
  ci_high REAL,
  ci_raw TEXT,
  ci_level_defaulted INTEGER,
  method_raw TEXT NOT NULL,
  PRIMARY KEY (pmid, content_hash)
);
CREATE INDEX IF NOT EXISTS summaries_disease ON summaries(disease_key);
CREATE INDEX IF NOT EXISTS summaries_country ON summaries(loc_country);
CREATE TABLE IF NOT EXISTS processed (
  pmid TEXT PRIMARY KEY,
  outcome TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS meta (
  key TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
)sql";

constexpr const char* kSummaryColumns =
    "pmid, content_hash, disease_raw, disease_key, location_raw, loc_name, loc_country, loc_iso2, "
    "loc_lat, loc_lon, loc_continent, date_raw, date_year, r0_min, r0_max, ci_level, ci_low, ci_high, "
    "ci_raw, ci_level_defaulted, method_raw";

constexpr const char* kPaperColumns = "pmid, title, abstract, pub_date_raw, pub_year, fetched_at";

int pmid_collation(void*, int la, const void* a, int lb, const void* b) {
  std::string_view sa(static_cast<const char*>(a), static_cast<std::size_t>(la));
  std::string_view sb(static_cast<const char*>(b), static_cast<std::size_t>(lb));
  if (pmid_less(sa, sb)) return -1;
  if (pmid_less(sb, sa)) return 1;
  return 0;
}

void fold_function(sqlite3_context* ctx, int, sqlite3_value** argv) {
  if (sqlite3_value_type(argv[0]) == SQLITE_NULL) {
    sqlite3_result_null(ctx);
    return;
  }
  const auto* text = reinterpret_cast<const char*>(sqlite3_value_text(argv[0]));
  std::string folded = fold_case(text ? text : "");
  sqlite3_result_text(ctx, folded.c_str(), static_cast<int>(folded.size()), SQLITE_TRANSIENT);
}

class Statement {
 public:
  Statement(sqlite3* db, const std::string& sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::StorageError, std::string("prepare: ") + sqlite3_errmsg(db));
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement& bind(int i, std::string_view v) {
    check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int i, double v) {
    check(sqlite3_bind_double(stmt_, i, v));
    return *this;
  }
  Statement& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }
  Statement& bind_null(int i) {
    check(sqlite3_bind_null(stmt_, i));
    return *this;
  }
  template <typename T>
  Statement& bind(int i, const std::optional<T>& v) {
    if (!v) return bind_null(i);
    if constexpr (std::is_integral_v<T>) {
      return bind(i, static_cast<std::int64_t>(*v));
    } else {
      return bind(i, *v);
    }
  }

  // True while rows remain.
  bool step() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(ErrorCode::StorageError, std::string("step: ") + sqlite3_errmsg(db_));
  }
  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
  }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  std::optional<int> opt_int(int col) const {
    if (is_null(col)) return std::nullopt;
    return static_cast<int>(integer(col));
  }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) throw Error(ErrorCode::StorageError, std::string("bind: ") + sqlite3_errmsg(db_));
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

PaperRecord read_paper(const Statement& st, int c = 0) {
  PaperRecord p;
  p.pmid = st.text(c);
  p.title = st.text(c + 1);
  p.abstract = st.text(c + 2);
  p.pub_date_raw = st.text(c + 3);
  p.pub_year = st.opt_int(c + 4);
  p.fetched_at = parse_timestamp(st.text(c + 5)).value_or(Timestamp{});
  return p;
}

StoredSummary read_summary(const Statement& st) {
  StoredSummary out;
  auto& s = out.summary;
  s.pmid = st.text(0);
  out.content_hash = st.text(1);
  s.disease_raw = st.text(2);
  s.disease_key = st.text(3);
  s.location_raw = st.text(4);
  if (!st.is_null(6)) {
    ResolvedLocation loc;
    loc.canonical_name = st.text(5);
    loc.country = st.text(6);
    loc.iso2 = st.text(7);
    loc.latitude = st.real(8);
    loc.longitude = st.real(9);
    loc.continent = st.text(10);
    s.location = std::move(loc);
  }
  s.date_raw = st.text(11);
  s.date_year = st.opt_int(12);
  s.r0_min = st.real(13);
  s.r0_max = st.real(14);
  if (!st.is_null(15)) {
    ConfidenceInterval ci;
    ci.level = st.real(15);
    ci.low = st.real(16);
    ci.high = st.real(17);
    ci.raw = st.text(18);
    ci.level_defaulted = st.integer(19) != 0;
    s.ci = std::move(ci);
  }
  s.method_raw = st.text(20);
  return out;
}

void validate_summary(const StructuredSummary& s) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::IntegrityError, "summary for pmid " + s.pmid + ": " + why);
  };
  if (!std::isfinite(s.r0_min) || !std::isfinite(s.r0_max) || s.r0_min < 0 || s.r0_min > s.r0_max) {
    fail("R0 bounds must be finite with 0 <= min <= max");
  }
  if (s.ci && (s.ci->low > s.ci->high || !(s.ci->level > 0 && s.ci->level <= 100))) {
    fail("invalid confidence interval");
  }
  if (s.location && (s.location->latitude < -90 || s.location->latitude > 90 ||
                     s.location->longitude < -180 || s.location->longitude > 180)) {
    fail("coordinates out of range");
  }
}

std::string hash_field(double v) { return format_decimal(v); }

}  // namespace

std::string_view outcome_name(PaperOutcome outcome) {
  switch (outcome) {
    case PaperOutcome::Unanswerable: return "unanswerable";
    case PaperOutcome::Unparseable: return "unparseable";
    case PaperOutcome::NoValidSummary: return "no_valid_summary";
  }
  return "unknown";
}

namespace {
PaperOutcome outcome_from(std::string_view name) {
  if (name == "unparseable") return PaperOutcome::Unparseable;
  if (name == "no_valid_summary") return PaperOutcome::NoValidSummary;
  return PaperOutcome::Unanswerable;
}
}  // namespace

std::string content_hash(const StructuredSummary& s) {
  constexpr char sep = '\x1f';
  std::string key;
  key += s.disease_key + sep;
  key += s.location_raw + sep;
  key += s.date_raw + sep;
  key += hash_field(s.r0_min) + sep + hash_field(s.r0_max) + sep;
  if (s.ci) {
    key += hash_field(s.ci->level) + sep + hash_field(s.ci->low) + sep + hash_field(s.ci->high) + sep;
  } else {
    key += std::string("-") + sep;
  }
  key += s.method_raw;
  return sha256_hex(key);
}

struct Store::Connection {
  sqlite3* db = nullptr;

  explicit Connection(const std::string& path) {
    int rc = sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX,
                             nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
      sqlite3_close(db);
      throw Error(ErrorCode::StoreUnavailable, "cannot open store " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db, 10000);
    sqlite3_create_collation(db, "PMID", SQLITE_UTF8, nullptr, pmid_collation);
    sqlite3_create_function(db, "fold", 1, SQLITE_UTF8 | SQLITE_DETERMINISTIC, nullptr, fold_function, nullptr,
                            nullptr);
  }
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection() { sqlite3_close(db); }

  void exec(const char* sql, ErrorCode code = ErrorCode::StorageError) const {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw Error(code, msg);
    }
  }
};

Store::Store(std::string path)
    : path_(std::move(path)),
      write_mutex_(std::make_unique<std::mutex>()),
      pool_mutex_(std::make_unique<std::mutex>()) {}

Store::Store(Store&&) noexcept = default;
Store& Store::operator=(Store&&) noexcept = default;
Store::~Store() = default;

Store Store::open(const std::string& path) {
  Store store(path);
  store.writer_ = std::make_unique<Connection>(path);
  store.writer_->exec("PRAGMA journal_mode=WAL;", ErrorCode::StoreUnavailable);
  store.writer_->exec("PRAGMA synchronous=NORMAL;", ErrorCode::StoreUnavailable);
  store.writer_->exec("PRAGMA foreign_keys=ON;", ErrorCode::StoreUnavailable);
  store.writer_->exec(kSchema, ErrorCode::StoreUnavailable);
  return store;
}

std::unique_ptr<Store::Connection> Store::acquire_reader() const {
  {
    std::lock_guard lock(*pool_mutex_);
    if (!readers_.empty()) {
      auto conn = std::move(readers_.back());
      readers_.pop_back();
      return conn;
    }
  }
  return std::make_unique<Connection>(path_);
}

void Store::release_reader(std::unique_ptr<Connection> conn) const {
  std::lock_guard lock(*pool_mutex_);
  if (readers_.size() < 16) readers_.push_back(std::move(conn));
}

template <typename F>
auto Store::with_reader(F&& f) const {
  auto conn = acquire_reader();
  conn->exec("BEGIN;");
  try {
    auto result = f(conn->db);
    conn->exec("COMMIT;");
    release_reader(std::move(conn));
    return result;
  } catch (...) {
    sqlite3_exec(conn->db, "ROLLBACK;", nullptr, nullptr, nullptr);
    throw;
  }
}

UpsertReport Store::upsert_batch(const std::vector<PaperRecord>& papers,
                                 const std::vector<StructuredSummary>& summaries) {
  UpsertBatch batch;
  batch.papers = papers;
  batch.summaries = summaries;
  return upsert(batch);
}

UpsertReport Store::upsert(const UpsertBatch& batch) {
  for (const auto& s : batch.summaries) validate_summary(s);
  for (const auto& p : batch.papers) {
    if (!is_digits(p.pmid) || trim(p.title).empty()) {
      throw Error(ErrorCode::IntegrityError, "paper \"" + p.pmid + "\" needs a numeric pmid and a title");
    }
  }

  std::lock_guard lock(*write_mutex_);
  sqlite3* db = writer_->db;
  writer_->exec("BEGIN IMMEDIATE;");
  UpsertReport report;
  try {
    Statement insert_paper(db, std::string("INSERT OR IGNORE INTO papers (") + kPaperColumns +
                                   ") VALUES (?,?,?,?,?,?)");
    for (const auto& p : batch.papers) {
      insert_paper.reset();
      insert_paper.bind(1, p.pmid)
          .bind(2, p.title)
          .bind(3, p.abstract)
          .bind(4, p.pub_date_raw)
          .bind(5, p.pub_year)
          .bind(6, format_timestamp(p.fetched_at));
      insert_paper.step();
      if (sqlite3_changes(db) > 0) {
        ++report.papers_new;
      } else {
        ++report.papers_existing;
      }
    }

    Statement paper_exists(db, "SELECT 1 FROM papers WHERE pmid = ?");
    Statement insert_summary(db, std::string("INSERT OR IGNORE INTO summaries (") + kSummaryColumns +
                                     ") VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?)");
    for (const auto& s : batch.summaries) {
      paper_exists.reset();
      paper_exists.bind(1, s.pmid);
      if (!paper_exists.step()) {
        throw Error(ErrorCode::IntegrityError, "summary references unknown pmid " + s.pmid);
      }
      insert_summary.reset();
      insert_summary.bind(1, s.pmid).bind(2, content_hash(s)).bind(3, s.disease_raw).bind(4, s.disease_key);
      insert_summary.bind(5, s.location_raw);
      if (s.location) {
        insert_summary.bind(6, s.location->canonical_name)
            .bind(7, s.location->country)
            .bind(8, s.location->iso2)
            .bind(9, s.location->latitude)
            .bind(10, s.location->longitude)
            .bind(11, s.location->continent);
      } else {
        for (int i = 6; i <= 11; ++i) insert_summary.bind_null(i);
      }
      insert_summary.bind(12, s.date_raw).bind(13, s.date_year).bind(14, s.r0_min).bind(15, s.r0_max);
      if (s.ci) {
        insert_summary.bind(16, s.ci->level)
            .bind(17, s.ci->low)
            .bind(18, s.ci->high)
            .bind(19, s.ci->raw)
            .bind(20, static_cast<std::int64_t>(s.ci->level_defaulted));
      } else {
        for (int i = 16; i <= 20; ++i) insert_summary.bind_null(i);
      }
      insert_summary.bind(21, s.method_raw);
      insert_summary.step();
      if (sqlite3_changes(db) > 0) {
        ++report.summaries_new;
      } else {
        ++report.summaries_existing;
      }
    }

    Statement insert_processed(db, "INSERT OR IGNORE INTO processed (pmid, outcome) VALUES (?, ?)");
    for (const auto& p : batch.processed) {
      insert_processed.reset();
      insert_processed.bind(1, p.pmid).bind(2, outcome_name(p.outcome));
      insert_processed.step();
    }

    if (batch.watermark) {
      Statement current(db, "SELECT value FROM meta WHERE key = 'watermark'");
      std::optional<Timestamp> existing;
      if (current.step()) existing = parse_timestamp(current.text(0));
      if (!existing || *existing < *batch.watermark) {
        Statement set(db, "INSERT INTO meta (key, value) VALUES ('watermark', ?) "
                          "ON CONFLICT(key) DO UPDATE SET value = excluded.value");
        set.bind(1, format_timestamp(*batch.watermark));
        set.step();
      }
    }
    writer_->exec("COMMIT;");
  } catch (...) {
    sqlite3_exec(db, "ROLLBACK;", nullptr, nullptr, nullptr);
    throw;
  }
  return report;
}

std::vector<StoredSummary> Store::query_summaries(const SummaryFilter& filter) const {
  return with_reader([&](sqlite3* db) {
    std::string sql = std::string("SELECT ") + kSummaryColumns + " FROM summaries WHERE 1=1";
    if (filter.disease_key) sql += " AND disease_key = :disease";
    if (filter.country) sql += " AND loc_country = :country";
    if (filter.r0_max_lo) sql += " AND r0_max >= :lo";
    if (filter.r0_max_hi) sql += " AND r0_max <= :hi";
    sql += " ORDER BY pmid COLLATE PMID, content_hash";
    Statement st(db, sql);
    int i = 1;
    if (filter.disease_key) st.bind(i++, *filter.disease_key);
    if (filter.country) st.bind(i++, *filter.country);
    if (filter.r0_max_lo) st.bind(i++, *filter.r0_max_lo);
    if (filter.r0_max_hi) st.bind(i++, *filter.r0_max_hi);
    std::vector<StoredSummary> out;
    while (st.step()) {
      auto row = read_summary(st);
      if (filter.pmids && !filter.pmids->contains(row.summary.pmid)) continue;
      out.push_back(std::move(row));
    }
    return out;
  });
}

PaperPage Store::list_papers(std::size_t page, std::size_t page_size,
                             const std::optional<std::string>& keyword) const {
  if (page == 0 || page_size == 0 || page_size > 500) {
    throw Error(ErrorCode::InvalidParameter, "page must be >= 1 and page size in [1, 500]");
  }
  return with_reader([&](sqlite3* db) {
    std::string where;
    std::string needle;
    if (keyword && !trim(*keyword).empty()) {
      needle = fold_case(trim(*keyword));
      where = " WHERE instr(fold(title), :kw) > 0 OR instr(fold(abstract), :kw) > 0 OR instr(pmid, :kw) > 0";
    }
    PaperPage out;
    Statement count(db, "SELECT COUNT(*) FROM papers" + where);
    if (!needle.empty()) count.bind(1, needle);
    count.step();
    out.total = static_cast<std::size_t>(count.integer(0));

    Statement rows(db, std::string("SELECT ") + kPaperColumns + " FROM papers" + where +
                           " ORDER BY pub_year IS NULL, pub_year DESC, pmid COLLATE PMID LIMIT :limit OFFSET :offset");
    int i = 1;
    if (!needle.empty()) rows.bind(i++, needle);
    rows.bind(i++, static_cast<std::int64_t>(page_size));
    rows.bind(i++, static_cast<std::int64_t>((page - 1) * page_size));
    while (rows.step()) out.rows.push_back(read_paper(rows));
    return out;
  });
}

std::optional<PaperRecord> Store::find_paper(const std::string& pmid) const {
  return with_reader([&](sqlite3* db) -> std::optional<PaperRecord> {
    Statement st(db, std::string("SELECT ") + kPaperColumns + " FROM papers WHERE pmid = ?");
    st.bind(1, pmid);
    if (!st.step()) return std::nullopt;
    return read_paper(st);
  });
}

std::set<std::string, std::less<>> Store::known_pmids() const {
  return with_reader([&](sqlite3* db) {
    std::set<std::string, std::less<>> out;
    Statement st(db, "SELECT pmid FROM papers UNION SELECT pmid FROM processed");
    while (st.step()) out.insert(st.text(0));
    return out;
  });
}

std::vector<ProcessedPaper> Store::processed_papers() const {
  return with_reader([&](sqlite3* db) {
    std::vector<ProcessedPaper> out;
    Statement st(db, "SELECT pmid, outcome FROM processed ORDER BY pmid COLLATE PMID");
    while (st.step()) out.push_back({st.text(0), outcome_from(st.text(1))});
    return out;
  });
}

std::optional<Timestamp> Store::watermark() const {
  return with_reader([&](sqlite3* db) -> std::optional<Timestamp> {
    Statement st(db, "SELECT value FROM meta WHERE key = 'watermark'");
    if (!st.step()) return std::nullopt;
    return parse_timestamp(st.text(0));
  });
}

StoreSnapshot Store::snapshot() const {
  return with_reader([&](sqlite3* db) {
    StoreSnapshot snap;
    Statement papers(db, std::string("SELECT ") + kPaperColumns +
                             " FROM papers ORDER BY pub_year IS NULL, pub_year DESC, pmid COLLATE PMID");
    while (papers.step()) snap.papers.push_back(read_paper(papers));
    Statement summaries(db, std::string("SELECT ") + kSummaryColumns +
                                " FROM summaries ORDER BY pmid COLLATE PMID, content_hash");
    while (summaries.step()) snap.summaries.push_back(read_summary(summaries));
    return snap;
  });
}

std::string Store::state_hash() const {
  return with_reader([&](sqlite3* db) {
    std::ostringstream out;
    auto emit = [&](const std::string& sql, int columns) {
      Statement st(db, sql);
      while (st.step()) {
        for (int c = 0; c < columns; ++c) {
          out << (st.is_null(c) ? std::string("\x01") : st.text(c)) << '\x1f';
        }
        out << '\n';
      }
      out << '\x1e';
    };
    emit(std::string("SELECT ") + kPaperColumns + " FROM papers ORDER BY pmid COLLATE PMID", 6);
    emit(std::string("SELECT ") + kSummaryColumns + " FROM summaries ORDER BY pmid COLLATE PMID, content_hash",
         21);
    emit("SELECT pmid, outcome FROM processed ORDER BY pmid COLLATE PMID", 2);
    return sha256_hex(out.str());
  });
}

}  // namespace r0scope
