#include "sqlsketch/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/execution.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

namespace fs = std::filesystem;

std::string_view to_string(DatasetFormat format) {
  return format == DatasetFormat::Spider ? "spider" : "kaggledbqa";
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (text::iequals(name, "spider")) return DatasetFormat::Spider;
  if (text::iequals(name, "kaggledbqa")) return DatasetFormat::KaggleDBQA;
  throw InvalidArgumentError("unknown dataset format '" + std::string(name) + "' (spider, kaggledbqa)");
}

const DatabaseSchema& Dataset::schema(const std::string& db_id) const {
  auto it = schemas.find(db_id);
  if (it == schemas.end()) throw DatasetIntegrityError("no schema for " + db_id, {db_id});
  return it->second;
}

const fs::path& Dataset::database(const std::string& db_id) const {
  auto it = databases.find(db_id);
  if (it == databases.end()) throw DatasetIntegrityError("no database file for " + db_id, {db_id});
  return it->second;
}

namespace {

std::optional<fs::path> first_existing(const fs::path& root, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (fs::exists(root / n)) return root / n;
  return std::nullopt;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DatasetIntegrityError("cannot read " + p.string(), {});
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetIntegrityError(p.string() + ": " + e.what(), {});
  }
}

void read_examples(const fs::path& file, std::vector<BenchmarkExample>& out, std::vector<std::string>& diagnostics) {
  const auto doc = read_json(file);
  if (!doc.is_array()) throw DatasetIntegrityError(file.string() + ": expected a list of examples", {});
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    if (!e.is_object() || !e.contains("question") || !e.contains("db_id") || !e.contains("query")) {
      diagnostics.push_back(file.filename().string() + "[" + std::to_string(i) +
                            "]: missing question, db_id or query; skipped");
      continue;
    }
    out.push_back({out.size(), e["question"].get<std::string>(), e["db_id"].get<std::string>(),
                   e["query"].get<std::string>()});
  }
}

}  // namespace

Dataset load_dataset(const fs::path& root, DatasetFormat format, const std::optional<fs::path>& examples_file) {
  if (!fs::is_directory(root)) throw DatasetIntegrityError("dataset root " + root.string() + " is not a directory", {});
  Dataset ds;
  ds.root = root;
  ds.format = format;

  std::optional<fs::path> tables;
  std::optional<fs::path> db_dir;
  std::vector<fs::path> example_files;
  if (format == DatasetFormat::Spider) {
    tables = first_existing(root, {"tables.json", "tables_post_perturbation.json"});
    db_dir = first_existing(root, {"database", "database_post_perturbation"});
    if (tables && tables->filename() != "tables.json")
      ds.diagnostics.push_back("using perturbed schema file " + tables->filename().string());
    if (db_dir && db_dir->filename() != "database")
      ds.diagnostics.push_back("using perturbed database directory " + db_dir->filename().string());
    if (examples_file) {
      example_files.push_back(examples_file->is_absolute() ? *examples_file : root / *examples_file);
    } else if (auto f = first_existing(root, {"dev.json", "questions_post_perturbation.json", "train_spider.json",
                                              "examples.json"})) {
      example_files.push_back(*f);
    }
  } else {
    tables = first_existing(root, {"KaggleDBQA_tables.json", "tables.json"});
    db_dir = first_existing(root, {"databases", "database"});
    if (examples_file) {
      example_files.push_back(examples_file->is_absolute() ? *examples_file : root / *examples_file);
    } else if (fs::is_directory(root / "examples")) {
      for (const auto& entry : fs::directory_iterator(root / "examples")) {
        const auto name = entry.path().filename().string();
        if (name.size() > 10 && name.ends_with("_test.json")) example_files.push_back(entry.path());
      }
      std::sort(example_files.begin(), example_files.end());
    }
  }
  if (!tables) throw DatasetIntegrityError("no schema file under " + root.string(), {});
  if (!db_dir) throw DatasetIntegrityError("no database directory under " + root.string(), {});
  if (example_files.empty()) throw DatasetIntegrityError("no examples file under " + root.string(), {});

  try {
    for (auto& s : load_schema_file(*tables)) {
      const auto name = s.db_name();
      if (!ds.schemas.emplace(name, std::move(s)).second)
        ds.diagnostics.push_back("duplicate schema for " + name + "; first kept");
    }
  } catch (const SchemaLoadError& e) {
    throw DatasetIntegrityError(e.what(), {});
  }
  for (const auto& f : example_files) read_examples(f, ds.examples, ds.diagnostics);

  std::set<std::string> missing;
  for (const auto& ex : ds.examples) {
    if (ds.databases.count(ex.db_id)) continue;
    const auto file = *db_dir / ex.db_id / (ex.db_id + ".sqlite");
    if (!ds.schemas.count(ex.db_id) || !fs::exists(file)) {
      missing.insert(ex.db_id);
      continue;
    }
    ds.databases.emplace(ex.db_id, file);
  }
  if (!missing.empty()) {
    std::vector<std::string> ids(missing.begin(), missing.end());
    throw DatasetIntegrityError("missing schema or database for: " + text::join(ids, ", "), ids);
  }
  return ds;
}

// --- tokens ---

namespace {

std::size_t words(const nlohmann::ordered_json& j) {
  return j.is_string() ? text::split_whitespace(j.get<std::string>()).size() : 0;
}

}  // namespace

TokenCount measure_tokens(std::span<const CallRecord> calls) {
  TokenCount out;
  for (const auto& c : calls) {
    if (c.role != Role::Completer) continue;
    const auto& req = c.request;
    if (req.contains("prompt")) {
      out.prompt += words(req["prompt"]);
    } else if (req.contains("messages") && req["messages"].is_array()) {
      for (const auto& m : req["messages"])
        if (m.contains("content")) out.prompt += words(m["content"]);
    }
    const auto& resp = c.response;
    if (resp.is_object() && resp.contains("text")) {
      out.response += words(resp["text"]);
    } else if (resp.is_object() && resp.contains("choices") && resp["choices"].is_array() && !resp["choices"].empty()) {
      const auto& ch = resp["choices"][0];
      if (ch.contains("message") && ch["message"].contains("content")) out.response += words(ch["message"]["content"]);
    }
  }
  return out;
}

// --- evaluation ---

Judgement judge(Connection& db, std::string_view predicted_sql, std::string_view gold_sql,
                std::chrono::milliseconds timeout) {
  Judgement j;
  const auto gold = execute(db, gold_sql, timeout);
  const auto pred = execute(db, predicted_sql, timeout);
  j.outcome = std::string(to_string(pred.kind()));
  if (gold.is_error()) {
    j.gold_failed = true;
    j.gold_error = gold.message();
    return j;
  }
  if (pred.is_error()) return j;
  j.match = results_equal(pred.result(), gold.result(), has_top_level_order_by(gold_sql));
  return j;
}

ExampleRunner pipeline_runner(const Pipeline& pipeline) {
  return [&pipeline](const BenchmarkExample& ex, const DatabaseSchema& schema, Connection& db) {
    return translate(pipeline, ex.question, schema, db);
  };
}

namespace {

ExampleRecord run_one(const Dataset& dataset, const BenchmarkExample& ex, const ExampleRunner& runner,
                      const EvalConfig& config) {
  using Clock = std::chrono::steady_clock;
  ExampleRecord rec;
  rec.index = ex.index;
  rec.db_id = ex.db_id;
  rec.question = ex.question;
  rec.gold_sql = ex.gold_sql;
  const auto t0 = Clock::now();
  ScopedCallCapture capture;
  try {
    auto db = Connection::open(dataset.database(ex.db_id), Connection::Mode::ReadOnly);
    auto result = runner(ex, dataset.schema(ex.db_id), db);
    rec.predicted_sql = result.sql;
    rec.status = std::string(to_string(result.selection.status));
    if (config.keep_traces) rec.trace = to_json(result);
    const auto j = judge(db, rec.predicted_sql, ex.gold_sql, config.statement_timeout);
    rec.outcome = j.outcome;
    rec.match = j.match;
    if (j.gold_failed) {
      rec.status = "GoldError";
      rec.error = j.gold_error;
    }
  } catch (const std::exception& e) {
    rec.status = "Error";
    rec.error = e.what();
    rec.match = false;
  }
  rec.tokens = measure_tokens(capture.records());
  rec.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  if (rec.latency_ms > static_cast<double>(config.example_timeout.count())) {
    rec.status = "Timeout";
    rec.match = false;
  }
  return rec;
}

}  // namespace

EvalReport evaluate(const Dataset& dataset, std::span<const BenchmarkExample> examples, const ExampleRunner& runner,
                    const EvalConfig& config) {
  EvalReport report;
  report.examples.resize(examples.size());
  const int n = static_cast<int>(examples.size());
  const int workers = static_cast<int>(std::max<std::size_t>(1, config.workers));
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
  for (int i = 0; i < n; ++i) report.examples[static_cast<std::size_t>(i)] = run_one(dataset, examples[i], runner, config);

  report.total = report.examples.size();
  std::size_t tokens = 0;
  for (const auto& r : report.examples) {
    if (r.match) ++report.correct;
    ++report.status_counts[r.status];
    tokens += r.tokens.total();
  }
  if (report.total > 0) {
    report.execution_accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    report.average_tokens = static_cast<double>(tokens) / static_cast<double>(report.total);
  }
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report, bool with_timing) {
  nlohmann::ordered_json out;
  out["total"] = report.total;
  out["correct"] = report.correct;
  out["execution_accuracy"] = report.execution_accuracy;
  out["status_counts"] = report.status_counts;
  out["average_tokens"] = report.average_tokens;
  if (!report.config.is_null()) out["config"] = report.config;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : report.examples) {
    nlohmann::ordered_json e;
    e["index"] = r.index;
    e["db_id"] = r.db_id;
    e["question"] = r.question;
    e["gold_sql"] = r.gold_sql;
    e["predicted_sql"] = r.predicted_sql;
    e["status"] = r.status;
    e["outcome"] = r.outcome;
    e["match"] = r.match;
    e["tokens"] = {{"prompt", r.tokens.prompt}, {"response", r.tokens.response}, {"total", r.tokens.total()}};
    if (with_timing) e["latency_ms"] = r.latency_ms;
    if (!r.error.empty()) e["error"] = r.error;
    if (!r.trace.is_null()) e["trace"] = r.trace;
    arr.push_back(std::move(e));
  }
  out["examples"] = arr;
  return out;
}

void write_summary(std::ostream& out, const EvalReport& report) {
  out << std::left << std::setw(22) << "examples" << report.total << "\n";
  out << std::setw(22) << "correct" << report.correct << "\n";
  out << std::setw(22) << "execution accuracy" << std::fixed << std::setprecision(4) << report.execution_accuracy
      << "\n";
  out << std::setw(22) << "average tokens" << std::setprecision(1) << report.average_tokens << "\n";
  for (const auto& [status, count] : report.status_counts)
    out << std::setw(22) << ("status " + status) << count << "\n";
  out.unsetf(std::ios::floatfield);
}

}  // namespace sqlsketch
