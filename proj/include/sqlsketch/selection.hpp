#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlsketch/calibration.hpp"
#include "sqlsketch/execution.hpp"
#include "sqlsketch/gateway.hpp"
#include "sqlsketch/sketch.hpp"

namespace sqlsketch {

struct SelectionConfig {
  std::size_t patience = 1;
  double similarity_threshold = kDefaultThreshold;
  std::shared_ptr<const SimilarityBackend> backend = std::make_shared<FuzzyBackend>();
  /// Restrict matching to one level (ablation); multi-level when unset.
  std::optional<MatchLevel> single_level;
  bool calibrate = true;
  std::size_t scan_cap = kDefaultScanCap;
  std::chrono::milliseconds statement_timeout = kDefaultStatementTimeout;
  SamplingParams sampling;

  /// Throws InvalidArgumentError.
  void validate() const;
};

// --- prompts ---

/// `Complete the following SQL sketch into a full SQL query answering the
/// question. question: <Q> database: <named schema> sketch: <SELECT part>
/// <FROM part> keywords: <keywords>`, sketch parts in named form.
std::string completion_prompt(std::string_view question, const DatabaseSchema& schema, const SqlSketch& sketch);

/// The completion prompt followed by the failing SQL and the engine message.
std::string error_feedback_prompt(std::string_view completion_prompt, std::string_view sql,
                                  std::string_view error_message);

/// `SQL: <sql>` followed by two sentences per replacement and one closing
/// instruction. Below-threshold replacements get a hedged wording.
std::string calibration_prompt(const DatabaseSchema& schema, const sql::ParsedQuery& query,
                               const CalibrationFeedback& feedback);

/// SQL out of a model response: code fences and a leading `SQL:` removed,
/// whitespace trimmed.
std::string extract_sql(std::string_view response);

// --- Algorithm 2 steps ---

std::string complete_sketch(CompleterClient& completer, std::string_view question, const DatabaseSchema& schema,
                            const SqlSketch& sketch, const SamplingParams& sampling = {});

struct ExecutionAttempt {
  std::string sql;
  ExecutionOutcome::Kind outcome = ExecutionOutcome::Kind::Error;
  std::string message;
};

struct ExecutionCheck {
  std::optional<std::string> sql;  // first executable query, if any
  std::vector<ExecutionAttempt> attempts;
  std::size_t rewrites = 0;
};

/// Executes and, on Error, asks the completer to repair the query, at most
/// `patience` times. Null results count as executable.
ExecutionCheck execution_check(std::string sql, Connection& db, std::size_t patience, CompleterClient& completer,
                               std::string_view completion_prompt, const SamplingParams& sampling = {},
                               std::chrono::milliseconds timeout = kDefaultStatementTimeout);

struct CalibrationStep {
  std::string sql;
  std::size_t completer_calls = 0;
  bool used_fallback = false;  // the model rewrite did not parse
};

/// Sends the feedback to the completer when it proposes a change; falls back
/// to the deterministic rewrite when the answer is not parseable SQL.
CalibrationStep apply_calibration(CompleterClient& completer, const DatabaseSchema& schema,
                                  const sql::ParsedQuery& query, const CalibrationFeedback& feedback,
                                  const SamplingParams& sampling = {});

enum class SelectionStatus { Selected, Exhausted };

std::string_view to_string(SelectionStatus status);

struct SketchRecord {
  SketchRecord(std::size_t rank_, SqlSketch sketch_) : rank(rank_), sketch(std::move(sketch_)) {}

  std::size_t rank = 0;
  SqlSketch sketch;
  std::string completion;
  std::vector<ExecutionAttempt> attempts;
  std::size_t rewrites = 0;
  bool executable = false;
  std::optional<CalibrationFeedback> feedback;
  std::optional<std::string> calibrated_sql;
  bool calibration_fallback = false;
  std::optional<ExecutionAttempt> final_execution;
  std::size_t completer_calls = 0;
  /// Rows, Null, Error (calibrated query failed) or NotExecutable.
  std::string status;
};

struct SelectionTrace {
  std::vector<SketchRecord> sketches;
  SelectionStatus status = SelectionStatus::Exhausted;
  std::optional<std::size_t> selected_rank;
  std::string final_sql;
};

struct SelectionResult {
  std::string sql;
  SelectionTrace trace;
};

/// Tries sketches in rank order and returns the first calibrated query with
/// a non-Null result. When none qualifies the status is Exhausted and the
/// SQL is the last executable calibrated query, else the last completion.
SelectionResult select_query(std::string_view question, const DatabaseSchema& schema, Connection& db,
                             std::span<const SqlSketch> sketches, CompleterClient& completer,
                             const SelectionConfig& config = {});

nlohmann::ordered_json to_json(const ExecutionAttempt& attempt);
nlohmann::ordered_json to_json(const SelectionTrace& trace);

}  // namespace sqlsketch
