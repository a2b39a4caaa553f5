#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlsketch/gateway.hpp"
#include "sqlsketch/pipeline.hpp"
#include "sqlsketch/schema.hpp"

namespace sqlsketch {

enum class DatasetFormat { Spider, KaggleDBQA };

std::string_view to_string(DatasetFormat format);
/// "spider" or "kaggledbqa" (case-insensitive); InvalidArgumentError otherwise.
DatasetFormat parse_dataset_format(std::string_view name);

struct BenchmarkExample {
  std::size_t index = 0;  // position in the examples file(s)
  std::string question;
  std::string db_id;
  std::string gold_sql;
};

struct Dataset {
  std::filesystem::path root;
  DatasetFormat format = DatasetFormat::Spider;
  std::vector<BenchmarkExample> examples;
  std::map<std::string, DatabaseSchema> schemas;
  std::map<std::string, std::filesystem::path> databases;
  std::vector<std::string> diagnostics;

  const DatabaseSchema& schema(const std::string& db_id) const;
  const std::filesystem::path& database(const std::string& db_id) const;
};

/// Spider layout: `tables.json`, `database/<db>/<db>.sqlite` and an examples
/// file (first of dev.json, questions_post_perturbation.json,
/// train_spider.json, examples.json unless given). The perturbed variants
/// (`tables_post_perturbation.json`, `database_post_perturbation/`) are
/// accepted with a diagnostic. KaggleDBQA: `KaggleDBQA_tables.json`,
/// `databases/<db>/<db>.sqlite`, `examples/*_test.json`.
/// Throws DatasetIntegrityError naming every db_id without a schema or file.
Dataset load_dataset(const std::filesystem::path& root, DatasetFormat format,
                     const std::optional<std::filesystem::path>& examples_file = std::nullopt);

struct TokenCount {
  std::size_t prompt = 0;
  std::size_t response = 0;
  std::size_t total() const noexcept { return prompt + response; }
};

/// Whitespace tokens of completer prompts and responses in a call log.
TokenCount measure_tokens(std::span<const CallRecord> calls);

struct ExampleRecord {
  std::size_t index = 0;
  std::string db_id;
  std::string question;
  std::string gold_sql;
  std::string predicted_sql;
  /// Selected, Exhausted, Error, Timeout or GoldError.
  std::string status;
  std::string outcome;  // Rows, Null or Error for the predicted query
  bool match = false;
  TokenCount tokens;
  double latency_ms = 0.0;
  std::string error;
  nlohmann::ordered_json trace;
};

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  double execution_accuracy = 0.0;
  std::map<std::string, std::size_t> status_counts;
  double average_tokens = 0.0;
  std::vector<ExampleRecord> examples;
  nlohmann::ordered_json config;
};

struct EvalConfig {
  std::size_t workers = 1;
  std::chrono::milliseconds example_timeout{120'000};
  std::chrono::milliseconds statement_timeout = kDefaultStatementTimeout;
  bool keep_traces = true;
};

/// Translates one example. The default runs `translate` with a pipeline.
using ExampleRunner =
    std::function<TranslationResult(const BenchmarkExample&, const DatabaseSchema&, Connection&)>;

ExampleRunner pipeline_runner(const Pipeline& pipeline);

/// Per-example failures become incorrect records; the run never aborts.
/// Examples run on up to `workers` threads, each with its own connection.
EvalReport evaluate(const Dataset& dataset, std::span<const BenchmarkExample> examples, const ExampleRunner& runner,
                    const EvalConfig& config = {});

/// Score one prediction against the gold query on a database.
struct Judgement {
  bool match = false;
  std::string outcome;
  bool gold_failed = false;
  std::string gold_error;
};
Judgement judge(Connection& db, std::string_view predicted_sql, std::string_view gold_sql,
                std::chrono::milliseconds timeout = kDefaultStatementTimeout);

nlohmann::ordered_json to_json(const EvalReport& report, bool with_timing = true);
void write_summary(std::ostream& out, const EvalReport& report);

}  // namespace sqlsketch
