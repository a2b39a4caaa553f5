#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;
struct sqlite3_stmt;

namespace sqlsketch {

struct Blob {
  std::string bytes;
  bool operator==(const Blob&) const = default;
};

/// One scalar cell. monostate is SQL NULL.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;

bool is_null(const Value& v);
std::string value_to_string(const Value& v);

/// An owned SQLite connection. Each thread should hold its own.
class Connection {
 public:
  enum class Mode { ReadOnly, ReadWrite, Create };

  static Connection open(const std::filesystem::path& path, Mode mode = Mode::ReadOnly);

  Connection(Connection&&) noexcept = default;
  Connection& operator=(Connection&&) noexcept = default;

  /// Runs one or more statements, discarding rows; throws DatabaseAccessError.
  void exec(std::string_view sql);

  /// Runs every row through `on_row`. Throws DatabaseAccessError carrying the
  /// engine's message verbatim.
  void query(std::string_view sql, const std::vector<Value>& params,
             const std::function<void(const std::vector<Value>&)>& on_row);

  std::vector<std::vector<Value>> query_all(std::string_view sql,
                                            const std::vector<Value>& params = {});

  sqlite3* handle() const noexcept { return db_.get(); }

 private:
  struct Closer {
    void operator()(sqlite3* db) const noexcept;
  };
  explicit Connection(sqlite3* db) : db_(db) {}
  std::unique_ptr<sqlite3, Closer> db_;
};

/// Quotes an identifier for interpolation into SQL text.
std::string quote_identifier(std::string_view name);

}  // namespace sqlsketch
