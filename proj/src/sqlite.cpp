#include "sqlsketch/sqlite.hpp"

#include <sqlite3.h>

#include <charconv>
#include <cstdio>

#include "sqlsketch/errors.hpp"

namespace sqlsketch {

namespace {

struct StmtFinalizer {
  void operator()(sqlite3_stmt* s) const noexcept { sqlite3_finalize(s); }
};
using StmtPtr = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

void bind(sqlite3_stmt* stmt, int index, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          sqlite3_bind_null(stmt, index);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          sqlite3_bind_int64(stmt, index, x);
        } else if constexpr (std::is_same_v<T, double>) {
          sqlite3_bind_double(stmt, index, x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          sqlite3_bind_text(stmt, index, x.data(), static_cast<int>(x.size()), SQLITE_TRANSIENT);
        } else {
          sqlite3_bind_blob(stmt, index, x.bytes.data(), static_cast<int>(x.bytes.size()),
                            SQLITE_TRANSIENT);
        }
      },
      v);
}

Value column_value(sqlite3_stmt* stmt, int i) {
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
      auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt, i));
      return Blob{p ? std::string(p, n) : std::string()};
    }
    default:
      return std::monostate{};
  }
}

}  // namespace

bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

std::string value_to_string(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[64];
          auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
          return std::string(buf, end);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          return "<blob " + std::to_string(x.bytes.size()) + " bytes>";
        }
      },
      v);
}

void Connection::Closer::operator()(sqlite3* db) const noexcept { sqlite3_close_v2(db); }

Connection Connection::open(const std::filesystem::path& path, Mode mode) {
  int flags = SQLITE_OPEN_NOMUTEX;
  switch (mode) {
    case Mode::ReadOnly:
      flags |= SQLITE_OPEN_READONLY;
      break;
    case Mode::ReadWrite:
      flags |= SQLITE_OPEN_READWRITE;
      break;
    case Mode::Create:
      flags |= SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE;
      break;
  }
  if (mode != Mode::Create && !std::filesystem::exists(path)) {
    throw DatabaseAccessError("database file not found: " + path.string());
  }
  sqlite3* raw = nullptr;
  int rc = sqlite3_open_v2(path.string().c_str(), &raw, flags, nullptr);
  Connection conn(raw);
  if (rc != SQLITE_OK) {
    std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
    throw DatabaseAccessError("cannot open " + path.string() + ": " + msg);
  }
  return conn;
}

void Connection::exec(std::string_view sql) {
  const std::string script(sql);
  char* err = nullptr;
  if (sqlite3_exec(db_.get(), script.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : sqlite3_errmsg(db_.get());
    sqlite3_free(err);
    throw DatabaseAccessError(msg);
  }
}

void Connection::query(std::string_view sql, const std::vector<Value>& params,
                       const std::function<void(const std::vector<Value>&)>& on_row) {
  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db_.get(), sql.data(), static_cast<int>(sql.size()), &raw, &tail);
  StmtPtr stmt(raw);
  if (rc != SQLITE_OK) throw DatabaseAccessError(sqlite3_errmsg(db_.get()));
  if (!stmt) return;  // empty statement
  for (std::size_t i = 0; i < params.size(); ++i) bind(stmt.get(), static_cast<int>(i + 1), params[i]);
  const int n = sqlite3_column_count(stmt.get());
  std::vector<Value> row(static_cast<std::size_t>(n));
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = column_value(stmt.get(), i);
    on_row(row);
  }
  if (rc != SQLITE_DONE) throw DatabaseAccessError(sqlite3_errmsg(db_.get()));
}

std::vector<std::vector<Value>> Connection::query_all(std::string_view sql,
                                                      const std::vector<Value>& params) {
  std::vector<std::vector<Value>> rows;
  query(sql, params, [&](const std::vector<Value>& r) { rows.push_back(r); });
  return rows;
}

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace sqlsketch
