#include "sqlsketch/execution.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/sql_parser.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

ResultSet::ResultSet(std::size_t column_count, std::vector<Row> rows)
    : column_count_(column_count), rows_(std::move(rows)) {
  for (const auto& row : rows_) {
    if (row.size() != column_count_) {
      throw InvalidArgumentError("row has " + std::to_string(row.size()) + " values, expected " +
                                 std::to_string(column_count_));
    }
  }
}

bool ResultSet::all_null() const {
  for (const auto& row : rows_)
    for (const auto& v : row)
      if (!is_null(v)) return false;
  return true;
}

ExecutionOutcome ExecutionOutcome::error(std::string message) {
  ExecutionOutcome out;
  out.state_ = ExecError{std::move(message)};
  return out;
}

ExecutionOutcome ExecutionOutcome::from_result(ResultSet result) {
  ExecutionOutcome out;
  if (result.empty() || result.all_null())
    out.state_ = ExecNull{std::move(result)};
  else
    out.state_ = ExecRows{std::move(result)};
  return out;
}

const std::string& ExecutionOutcome::message() const {
  static const std::string none;
  if (const auto* e = std::get_if<ExecError>(&state_)) return e->message;
  return none;
}

const ResultSet& ExecutionOutcome::result() const {
  if (const auto* n = std::get_if<ExecNull>(&state_)) return n->result;
  if (const auto* r = std::get_if<ExecRows>(&state_)) return r->result;
  throw InvalidArgumentError("an Error outcome has no result set");
}

std::string_view to_string(ExecutionOutcome::Kind kind) {
  switch (kind) {
    case ExecutionOutcome::Kind::Error:
      return "Error";
    case ExecutionOutcome::Kind::Null:
      return "Null";
    case ExecutionOutcome::Kind::Rows:
      break;
  }
  return "Rows";
}

namespace {

using Clock = std::chrono::steady_clock;

struct Deadline {
  Clock::time_point at;
  bool hit = false;
};

int progress_check(void* arg) {
  auto* d = static_cast<Deadline*>(arg);
  if (Clock::now() >= d->at) {
    d->hit = true;
    return 1;
  }
  return 0;
}

struct StmtCloser {
  void operator()(sqlite3_stmt* s) const noexcept { sqlite3_finalize(s); }
};

Value read_cell(sqlite3_stmt* stmt, int i) {
  switch (sqlite3_column_type(stmt, i)) {
    case SQLITE_INTEGER:
      return static_cast<std::int64_t>(sqlite3_column_int64(stmt, i));
    case SQLITE_FLOAT:
      return sqlite3_column_double(stmt, i);
    case SQLITE_TEXT: {
      const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
      return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt, i)));
    }
    case SQLITE_BLOB: {
      const auto* p = static_cast<const char*>(sqlite3_column_blob(stmt, i));
      return Blob{std::string(p ? p : "", static_cast<std::size_t>(sqlite3_column_bytes(stmt, i)))};
    }
    default:
      return std::monostate{};
  }
}

bool only_terminators(const char* tail) {
  for (; tail && *tail; ++tail)
    if (*tail != ';' && !std::isspace(static_cast<unsigned char>(*tail))) return false;
  return true;
}

}  // namespace

ExecutionOutcome execute(Connection& db, std::string_view sql, std::chrono::milliseconds timeout) {
  sqlite3* h = db.handle();
  if (!h) return ExecutionOutcome::error("database connection is closed");

  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(h, sql.data(), static_cast<int>(sql.size()), &raw, &tail);
  std::unique_ptr<sqlite3_stmt, StmtCloser> stmt(raw);
  if (rc != SQLITE_OK) return ExecutionOutcome::error(sqlite3_errmsg(h));
  if (!stmt) return ExecutionOutcome::error("empty statement");
  const char* end = sql.data() + sql.size();
  if (tail && tail < end && !only_terminators(std::string(tail, end).c_str()))
    return ExecutionOutcome::error("multiple statements are not allowed");
  if (!sqlite3_stmt_readonly(stmt.get())) return ExecutionOutcome::error("only read-only statements are allowed");

  Deadline deadline{Clock::now() + timeout};
  sqlite3_progress_handler(h, 1000, progress_check, &deadline);
  struct Reset {
    sqlite3* h;
    ~Reset() { sqlite3_progress_handler(h, 0, nullptr, nullptr); }
  } reset{h};

  const int ncols = sqlite3_column_count(stmt.get());
  std::vector<Row> rows;
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    Row row;
    row.reserve(static_cast<std::size_t>(ncols));
    for (int i = 0; i < ncols; ++i) row.push_back(read_cell(stmt.get(), i));
    rows.push_back(std::move(row));
  }
  if (rc != SQLITE_DONE) {
    if (deadline.hit)
      return ExecutionOutcome::error("statement timed out after " + std::to_string(timeout.count()) + " ms");
    return ExecutionOutcome::error(sqlite3_errmsg(h));
  }
  return ExecutionOutcome::from_result(ResultSet(static_cast<std::size_t>(ncols), std::move(rows)));
}

ExecutionOutcome execute(const std::filesystem::path& db_path, std::string_view sql,
                         std::chrono::milliseconds timeout) {
  try {
    auto db = Connection::open(db_path, Connection::Mode::ReadOnly);
    return execute(db, sql, timeout);
  } catch (const std::exception& e) {
    return ExecutionOutcome::error(e.what());
  }
}

// --- comparison ---

namespace {

constexpr double kTolerance = 1e-6;

int type_rank(const Value& v) {
  switch (v.index()) {
    case 0:
      return 0;
    case 1:
    case 2:
      return 1;
    case 3:
      return 2;
    default:
      return 3;
  }
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

int compare_values(const Value& a, const Value& b) {
  const int ra = type_rank(a), rb = type_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 0:
      return 0;
    case 1: {
      if (a.index() == 1 && b.index() == 1) {
        auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
        return x < y ? -1 : (x > y ? 1 : 0);
      }
      double x = as_double(a), y = as_double(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    case 2:
      return std::get<std::string>(a).compare(std::get<std::string>(b));
    default:
      return std::get<Blob>(a).bytes.compare(std::get<Blob>(b).bytes);
  }
}

bool rows_equal(const Row& a, const Row& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!values_equal(a[i], b[i])) return false;
  return true;
}

bool row_less(const Row& a, const Row& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    int c = compare_values(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

bool has_real(const std::vector<Row>& rows) {
  for (const auto& r : rows)
    for (const auto& v : r)
      if (v.index() == 2) return true;
  return false;
}

// Tolerant comparison can disagree with the sort order near boundaries.
bool greedy_multiset_equal(const std::vector<Row>& a, const std::vector<Row>& b) {
  std::vector<bool> used(b.size(), false);
  for (const auto& row : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!used[j] && rows_equal(row, b[j])) {
        used[j] = found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

bool values_equal(const Value& a, const Value& b) {
  const int ra = type_rank(a), rb = type_rank(b);
  if (ra != rb) return false;
  if (ra == 1) {
    if (a.index() == 1 && b.index() == 1) return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    const double x = as_double(a), y = as_double(b);
    if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
    return std::fabs(x - y) <= kTolerance * std::max({1.0, std::fabs(x), std::fabs(y)});
  }
  return compare_values(a, b) == 0;
}

bool results_equal(const ResultSet& predicted, const ResultSet& gold, bool order_sensitive) {
  if (predicted.column_count() != gold.column_count()) return false;
  const auto& p = predicted.rows();
  const auto& g = gold.rows();
  if (p.size() != g.size()) return false;
  if (order_sensitive) {
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!rows_equal(p[i], g[i])) return false;
    return true;
  }
  auto ps = p;
  auto gs = g;
  std::sort(ps.begin(), ps.end(), row_less);
  std::sort(gs.begin(), gs.end(), row_less);
  bool same = true;
  for (std::size_t i = 0; i < ps.size() && same; ++i) same = rows_equal(ps[i], gs[i]);
  if (same) return true;
  if (!has_real(p) && !has_real(g)) return false;
  return greedy_multiset_equal(ps, gs);
}

bool has_top_level_order_by(std::string_view gold_sql) {
  try {
    return !sql::parse_sql(gold_sql).tree().order_by.empty();
  } catch (const SqlParseError&) {
  }
  try {
    int depth = 0;
    auto toks = sql::tokenize(gold_sql);
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      if (toks[i].is_symbol("(")) ++depth;
      if (toks[i].is_symbol(")")) --depth;
      if (depth == 0 && toks[i].is_keyword("ORDER") && toks[i + 1].is_keyword("BY")) return true;
    }
  } catch (const SqlParseError&) {
  }
  return false;
}

}  // namespace sqlsketch
