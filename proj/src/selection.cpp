#include "sqlsketch/selection.hpp"

#include "sqlsketch/errors.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

void SelectionConfig::validate() const {
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0))
    throw InvalidArgumentError("similarity threshold must lie in (0, 1]");
  if (!backend) throw InvalidArgumentError("selection needs a similarity backend");
  if (statement_timeout.count() <= 0) throw InvalidArgumentError("statement timeout must be positive");
}

// --- prompts ---

std::string completion_prompt(std::string_view question, const DatabaseSchema& schema, const SqlSketch& sketch) {
  const auto named = translate_sketch(schema, sketch);
  std::string out = "Complete the following SQL sketch into a full SQL query answering the question. question: ";
  out += question;
  out += " database: " + serialize_schema_named(schema);
  out += " sketch: " + named.select_part + " " + named.from_part;
  out += " keywords: " + named.keywords_part;
  return out;
}

std::string error_feedback_prompt(std::string_view prompt, std::string_view sql, std::string_view error_message) {
  std::string out(prompt);
  out += " SQL: ";
  out += sql;
  out += " error: ";
  out += error_message;
  out += " Fix the SQL query and output only SQL.";
  return out;
}

namespace {

std::string op_text(PredicateOp op) { return op == PredicateOp::Like ? "LIKE" : "="; }

}  // namespace

std::string calibration_prompt(const DatabaseSchema& schema, const sql::ParsedQuery& query,
                               const CalibrationFeedback& feedback) {
  std::string out = "SQL: " + query.original_text();
  for (const auto& r : feedback.replacements) {
    const auto repl = replacement_predicate(schema, query, r);
    if (repl.value == r.original.value && text::iequals(repl.column, r.original.column)) continue;
    const auto op = op_text(r.original.op);
    const auto old_pred = r.original.column + " " + op + " " + sql::render_string_literal(r.original.value);
    const auto new_pred = repl.column + " " + op + " " + sql::render_string_literal(repl.value);
    if (r.match.below_threshold) {
      out += " The predicate " + old_pred + " may not match the database content. A possibly related database value is " +
             new_pred + ".";
    } else {
      out += " The predicate " + old_pred + " does not match the database content. The closest database value is " +
             new_pred + ".";
    }
  }
  out += " Rewrite the SQL query accordingly and output only SQL.";
  return out;
}

std::string extract_sql(std::string_view response) {
  std::string s(text::trim(response));
  if (auto open = s.find("```"); open != std::string::npos) {
    auto body = s.find('\n', open);
    auto close = body == std::string::npos ? std::string::npos : s.find("```", body);
    if (body != std::string::npos) s = s.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1);
    s = std::string(text::trim(s));
  }
  if (s.size() >= 4 && text::iequals(s.substr(0, 4), "SQL:")) s = std::string(text::trim(s.substr(4)));
  return s;
}

// --- steps ---

std::string complete_sketch(CompleterClient& completer, std::string_view question, const DatabaseSchema& schema,
                            const SqlSketch& sketch, const SamplingParams& sampling) {
  return extract_sql(completer.request_completion(completion_prompt(question, schema, sketch), sampling));
}

namespace {

ExecutionAttempt attempt_of(std::string sql, const ExecutionOutcome& outcome) {
  return {std::move(sql), outcome.kind(), outcome.message()};
}

}  // namespace

ExecutionCheck execution_check(std::string sql, Connection& db, std::size_t patience, CompleterClient& completer,
                               std::string_view prompt, const SamplingParams& sampling,
                               std::chrono::milliseconds timeout) {
  ExecutionCheck check;
  while (true) {
    const auto outcome = execute(db, sql, timeout);
    check.attempts.push_back(attempt_of(sql, outcome));
    if (!outcome.is_error()) {
      check.sql = sql;
      return check;
    }
    if (check.rewrites >= patience) return check;
    ++check.rewrites;
    sql = extract_sql(completer.request_completion(error_feedback_prompt(prompt, sql, outcome.message()), sampling));
  }
}

CalibrationStep apply_calibration(CompleterClient& completer, const DatabaseSchema& schema,
                                  const sql::ParsedQuery& query, const CalibrationFeedback& feedback,
                                  const SamplingParams& sampling) {
  CalibrationStep step{query.original_text(), 0, false};
  if (!feedback.changes_query(true)) return step;
  const auto response = completer.request_completion(calibration_prompt(schema, query, feedback), sampling);
  step.completer_calls = 1;
  auto candidate = extract_sql(response);
  try {
    sql::parse_sql(candidate);
    step.sql = std::move(candidate);
  } catch (const SqlParseError&) {
    step.used_fallback = true;
    step.sql = apply_replacements(schema, query, feedback).original_text();
  }
  return step;
}

std::string_view to_string(SelectionStatus status) {
  return status == SelectionStatus::Selected ? "Selected" : "Exhausted";
}

SelectionResult select_query(std::string_view question, const DatabaseSchema& schema, Connection& db,
                             std::span<const SqlSketch> sketches, CompleterClient& completer,
                             const SelectionConfig& config) {
  if (sketches.empty()) throw EmptyCandidateError("no sketches to complete");
  config.validate();

  SelectionResult result;
  auto& trace = result.trace;
  std::optional<std::string> last_calibrated;
  std::string last_raw;

  for (const auto& sketch : sketches) {
    SketchRecord rec(sketch.rank, sketch);
    const auto prompt = completion_prompt(question, schema, sketch);
    rec.completion = extract_sql(completer.request_completion(prompt, config.sampling));
    rec.completer_calls = 1;
    last_raw = rec.completion;

    auto check = execution_check(rec.completion, db, config.patience, completer, prompt, config.sampling,
                                 config.statement_timeout);
    rec.attempts = std::move(check.attempts);
    rec.rewrites = check.rewrites;
    rec.completer_calls += check.rewrites;
    if (!check.sql) {
      rec.status = "NotExecutable";
      trace.sketches.push_back(std::move(rec));
      continue;
    }
    rec.executable = true;

    std::string calibrated = *check.sql;
    if (config.calibrate) {
      std::optional<sql::ParsedQuery> parsed;
      try {
        parsed = sql::parse_sql(calibrated);
      } catch (const SqlParseError&) {
        // the engine accepted it; leave it uncalibrated
      }
      if (parsed) {
        CalibrationOptions opts{config.scan_cap};
        auto feedback = config.single_level
                            ? single_level_match(db, schema, *parsed, config.similarity_threshold, *config.backend,
                                                 *config.single_level, opts)
                            : multi_level_match(db, schema, *parsed, config.similarity_threshold, *config.backend, opts);
        auto step = apply_calibration(completer, schema, *parsed, feedback, config.sampling);
        rec.completer_calls += step.completer_calls;
        rec.calibration_fallback = step.used_fallback;
        calibrated = step.sql;
        rec.feedback = std::move(feedback);
      }
    }
    rec.calibrated_sql = calibrated;

    const auto outcome = execute(db, calibrated, config.statement_timeout);
    rec.final_execution = attempt_of(calibrated, outcome);
    rec.status = std::string(to_string(outcome.kind()));
    if (!outcome.is_error()) last_calibrated = calibrated;
    trace.sketches.push_back(std::move(rec));
    if (outcome.is_rows()) {
      trace.status = SelectionStatus::Selected;
      trace.selected_rank = sketch.rank;
      trace.final_sql = result.sql = calibrated;
      return result;
    }
  }
  trace.status = SelectionStatus::Exhausted;
  trace.final_sql = result.sql = last_calibrated ? *last_calibrated : last_raw;
  return result;
}

nlohmann::ordered_json to_json(const ExecutionAttempt& a) {
  nlohmann::ordered_json out = {{"sql", a.sql}, {"outcome", std::string(to_string(a.outcome))}};
  if (!a.message.empty()) out["message"] = a.message;
  return out;
}

nlohmann::ordered_json to_json(const SelectionTrace& trace) {
  auto sketches = nlohmann::ordered_json::array();
  for (const auto& r : trace.sketches) {
    nlohmann::ordered_json s;
    s["rank"] = r.rank;
    s["sketch"] = to_json(r.sketch);
    s["completion"] = r.completion;
    auto attempts = nlohmann::ordered_json::array();
    for (const auto& a : r.attempts) attempts.push_back(to_json(a));
    s["execution_attempts"] = attempts;
    s["rewrites"] = r.rewrites;
    s["executable"] = r.executable;
    s["calibration_feedback"] = r.feedback ? to_json(*r.feedback) : nlohmann::ordered_json(nullptr);
    s["calibrated_sql"] = r.calibrated_sql ? nlohmann::ordered_json(*r.calibrated_sql) : nlohmann::ordered_json(nullptr);
    s["calibration_fallback"] = r.calibration_fallback;
    s["final_execution"] = r.final_execution ? to_json(*r.final_execution) : nlohmann::ordered_json(nullptr);
    s["completer_calls"] = r.completer_calls;
    s["status"] = r.status;
    sketches.push_back(std::move(s));
  }
  nlohmann::ordered_json out;
  out["status"] = std::string(to_string(trace.status));
  out["selected_rank"] = trace.selected_rank ? nlohmann::ordered_json(*trace.selected_rank) : nlohmann::ordered_json(nullptr);
  out["final_sql"] = trace.final_sql;
  out["sketches"] = sketches;
  return out;
}

}  // namespace sqlsketch
