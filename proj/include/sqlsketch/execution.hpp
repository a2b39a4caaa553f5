#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqlsketch/sqlite.hpp"

namespace sqlsketch {

using Row = std::vector<Value>;

class ResultSet {
 public:
  ResultSet() = default;
  /// Throws InvalidArgumentError if a row has the wrong width.
  ResultSet(std::size_t column_count, std::vector<Row> rows);

  std::size_t column_count() const noexcept { return column_count_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }
  bool all_null() const;

  bool operator==(const ResultSet&) const = default;

 private:
  std::size_t column_count_ = 0;
  std::vector<Row> rows_;
};

struct ExecError {
  std::string message;
};
struct ExecNull {
  ResultSet result;  // empty or all-null; kept for result comparison
};
struct ExecRows {
  ResultSet result;
};

class ExecutionOutcome {
 public:
  enum class Kind { Error, Null, Rows };

  static ExecutionOutcome error(std::string message);
  /// Null or Rows depending on the content.
  static ExecutionOutcome from_result(ResultSet result);

  Kind kind() const noexcept { return static_cast<Kind>(state_.index()); }
  bool is_error() const noexcept { return kind() == Kind::Error; }
  bool is_null() const noexcept { return kind() == Kind::Null; }
  bool is_rows() const noexcept { return kind() == Kind::Rows; }

  /// Engine message; empty unless is_error().
  const std::string& message() const;
  /// The result set for Null and Rows; throws for Error.
  const ResultSet& result() const;

 private:
  std::variant<ExecError, ExecNull, ExecRows> state_;
};

std::string_view to_string(ExecutionOutcome::Kind kind);

inline constexpr std::chrono::milliseconds kDefaultStatementTimeout{30'000};

/// Never throws. Non-read-only statements and timeouts become Error outcomes.
ExecutionOutcome execute(Connection& db, std::string_view sql,
                         std::chrono::milliseconds timeout = kDefaultStatementTimeout);
/// Opens a private read-only connection for the call.
ExecutionOutcome execute(const std::filesystem::path& db_path, std::string_view sql,
                         std::chrono::milliseconds timeout = kDefaultStatementTimeout);

/// Cell equality: nulls only to nulls, numbers numerically with a 1e-6
/// tolerance when a real is involved, everything else exactly.
bool values_equal(const Value& a, const Value& b);

bool results_equal(const ResultSet& predicted, const ResultSet& gold, bool order_sensitive);

/// True when the outermost query of `gold_sql` has ORDER BY.
bool has_top_level_order_by(std::string_view gold_sql);

}  // namespace sqlsketch
