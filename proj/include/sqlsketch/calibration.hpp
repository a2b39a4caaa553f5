#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlsketch/predicates.hpp"
#include "sqlsketch/schema.hpp"
#include "sqlsketch/similarity.hpp"
#include "sqlsketch/sqlite.hpp"

namespace sqlsketch {

enum class MatchLevel { Column = 0, Table = 1, Database = 2 };

std::string_view to_string(MatchLevel level);

inline constexpr std::size_t kDefaultScanCap = 10'000;
inline constexpr double kDefaultThreshold = 0.65;

/// A distinct text value and the column it was read from.
struct CandidateValue {
  std::size_t table_index = 0;
  std::size_t column_index = 0;
  std::string table;
  std::string column;
  std::string value;

  bool operator==(const CandidateValue&) const = default;
};

struct MatchResult {
  std::size_t table_index = 0;
  std::size_t column_index = 0;
  std::string table;
  std::string column;
  std::string value;
  double score = 0.0;
  MatchLevel level = MatchLevel::Column;
  bool below_threshold = false;

  bool operator==(const MatchResult&) const = default;
};

struct ColumnLocation {
  std::size_t table_index = 0;
  std::size_t column_index = 0;
  bool operator==(const ColumnLocation&) const = default;
};

struct Replacement {
  Predicate original;
  std::optional<ColumnLocation> original_location;  // where the predicate column resolved
  MatchResult match;
};

struct CalibrationFeedback {
  std::vector<Replacement> replacements;

  bool empty() const noexcept { return replacements.empty(); }
  /// True when some replacement changes the query (other column or value).
  /// Below-threshold replacements only count when asked for.
  bool changes_query(bool include_below_threshold = false) const;
};

/// A base table of the query with the name used to qualify its columns.
struct FromTable {
  std::size_t table_index = 0;
  std::string alias;  // alias if present, else the table name as written
};

/// Base tables of every SELECT core, in order of appearance, by schema index
/// (tables the schema does not know are skipped).
std::vector<FromTable> from_tables(const DatabaseSchema& schema, const sql::ParsedQuery& query);

/// The schema column a predicate refers to: through its qualifier when it
/// has one, else the first FROM table with a column of that name.
std::optional<ColumnLocation> resolve_predicate_column(const DatabaseSchema& schema,
                                                       const sql::ParsedQuery& query,
                                                       const Predicate& predicate);

/// Reads distinct non-blank text values per column, at most `cap` each, and
/// remembers them for the lifetime of the object.
class ValueScanner {
 public:
  ValueScanner(Connection& db, const DatabaseSchema& schema, std::size_t cap = kDefaultScanCap);

  const std::vector<std::string>& values(std::size_t table_index, std::size_t column_index);
  const DatabaseSchema& schema() const noexcept { return schema_; }

 private:
  Connection& db_;
  const DatabaseSchema& schema_;
  std::size_t cap_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::string>> cache_;
};

/// Column: values of the resolved column. Table: text-declared columns of
/// the owning table (every FROM table when the column does not resolve).
/// Database: text-declared columns of every table. The resolved column is
/// part of all three levels, so each level contains the one below it.
std::vector<CandidateValue> candidate_values(MatchLevel level, ValueScanner& scanner,
                                             const sql::ParsedQuery& query, const Predicate& predicate);

/// Highest-scoring candidate; ties go to the earlier (table, column) and
/// then the smaller value. nullopt when there are no candidates.
std::optional<MatchResult> best_match(std::span<const CandidateValue> candidates, std::string_view value,
                                      const SimilarityBackend& backend, MatchLevel level = MatchLevel::Column);

/// The text a predicate is matched on: LIKE wildcards at either end removed.
std::string match_text(const Predicate& predicate);

struct CalibrationOptions {
  std::size_t scan_cap = kDefaultScanCap;
};

/// Column, then Table, then Database; the first level whose best score is at
/// least `threshold` wins. Otherwise the best match over all levels is
/// reported with below_threshold set.
CalibrationFeedback multi_level_match(Connection& db, const DatabaseSchema& schema,
                                      const sql::ParsedQuery& query, double threshold,
                                      const SimilarityBackend& backend, const CalibrationOptions& options = {});

/// Only one level is searched (ablation comparator).
CalibrationFeedback single_level_match(Connection& db, const DatabaseSchema& schema,
                                       const sql::ParsedQuery& query, double threshold,
                                       const SimilarityBackend& backend, MatchLevel level,
                                       const CalibrationOptions& options = {});

/// The predicate a replacement stands for, as it should appear in the query:
/// value with the original wildcards, column text qualified like the original.
Predicate replacement_predicate(const DatabaseSchema& schema, const sql::ParsedQuery& query,
                                const Replacement& replacement);

/// Applies every at-or-above-threshold replacement to the query text.
sql::ParsedQuery apply_replacements(const DatabaseSchema& schema, const sql::ParsedQuery& query,
                                    const CalibrationFeedback& feedback);

nlohmann::ordered_json to_json(const MatchResult& match);
nlohmann::ordered_json to_json(const CalibrationFeedback& feedback);

}  // namespace sqlsketch
