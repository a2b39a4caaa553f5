#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlsketch/calibration.hpp"
#include "sqlsketch/harness.hpp"
#include "sqlsketch/pipeline.hpp"
#include "sqlsketch/schema.hpp"
#include "sqlsketch/sketch.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using sqlsketch::DatabaseSchema;

/// Fresh empty directory under the system temp dir.
fs::path temp_dir(std::string_view name);

/// Creates a SQLite file and runs `script` in it.
fs::path create_database(const fs::path& file, std::string_view script);

// Course(id, course, teacher) and Student(id, given_name, last_name, score, course).
inline constexpr const char* kFig1Question = "Which course has the highest score for the student named timmothy ward?";
inline constexpr const char* kFig1Gold =
    "SELECT course FROM Student WHERE given_name = 'timmy' AND last_name = 'ward' ORDER BY score LIMIT 1";
inline constexpr const char* kFig1Completion =
    "SELECT course FROM Student WHERE given_name = 'timmothy' AND last_name = 'ward' ORDER BY score LIMIT 1";
extern const char* const kFig1Script;

fs::path create_fig1_db(const fs::path& dir, std::string_view db_name = "school");

/// Schema in the table order used by the serialization example.
DatabaseSchema car1_schema();
/// stadium(stadium_id, name, highest, lowest, average).
DatabaseSchema stadium_schema();

/// Straightforward O(mn) LCS.
std::size_t lcs_dp(std::string_view a, std::string_view b);
/// clamp(1 - (m + n - 2 LCS) / min(m, n), 0, 1) on lower-case input.
double fuzzy_oracle(std::string_view a, std::string_view b);

/// A `tables.json` record for a schema.
nlohmann::json spider_record(const DatabaseSchema& schema);

/// Spider layout with two databases (school, shop) and `n` examples
/// cycling through a fixed set of gold queries; questions are unique.
fs::path create_spider_fixture(const fs::path& dir, std::size_t n);

/// Stub script under which the pipeline reproduces each gold query: the
/// sketch provider returns the gold parts and the completer the gold SQL.
/// Examples listed in `wrong` get an executable but different query.
nlohmann::ordered_json gold_echo_script(const sqlsketch::Dataset& dataset,
                                        std::span<const sqlsketch::BenchmarkExample> examples,
                                        const std::set<std::size_t>& wrong = {});

/// Script for the Fig. 1 walk-through: sketch candidates, aligner scores,
/// completer answers and encoder vectors.
nlohmann::ordered_json fig1_script(const DatabaseSchema& schema);

/// A random toy database with one query over it, plus what each predicate
/// of the query is known to refer to.
struct CalibrationCase {
  fs::path db;
  std::string sql;
  struct Pred {
    std::optional<sqlsketch::ColumnLocation> column;  // nullopt: no such column in FROM
    std::vector<std::size_t> from_tables;
    std::string text;  // value without LIKE wildcards
  };
  std::vector<Pred> predicates;
};

CalibrationCase random_calibration_case(unsigned seed, const fs::path& dir);

struct OracleMatch {
  std::size_t table_index = 0;
  std::size_t column_index = 0;
  std::string value;
  double score = 0.0;
  sqlsketch::MatchLevel level = sqlsketch::MatchLevel::Column;
  bool below_threshold = false;
};

/// Exhaustive search over (level, candidate) with its own SQL, scored with
/// fuzzy_oracle; the first level reaching `threshold` wins.
std::optional<OracleMatch> brute_force_match(const fs::path& db, const DatabaseSchema& schema,
                                             const CalibrationCase::Pred& pred, double threshold);

/// Pipeline whose roles all answer from `script`. The aligner and the
/// sentence encoder are wired only when the script has a score / encode
/// section; calibration then uses the encoder.
sqlsketch::Pipeline stub_pipeline(const nlohmann::ordered_json& script);

void write_json(const fs::path& file, const nlohmann::ordered_json& doc);

}  // namespace fixtures
