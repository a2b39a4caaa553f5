#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqlsketch/calibration.hpp"
#include "sqlsketch/errors.hpp"
#include "sqlsketch/gateway.hpp"
#include "sqlsketch/harness.hpp"
#include "sqlsketch/pipeline.hpp"
#include "sqlsketch/schema.hpp"
#include "sqlsketch/selection.hpp"
#include "sqlsketch/similarity.hpp"
#include "sqlsketch/sketch.hpp"

namespace fs = std::filesystem;
using namespace sqlsketch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitExhausted = 2;

struct Options {
  // data
  std::string dataset;
  std::string format = "spider";
  std::string examples;
  std::string db;
  std::string question;
  std::string sql;
  bool json = false;
  std::size_t limit = 0;
  std::string out;
  std::string trace;
  std::string summary;
  bool no_timing = false;

  // pipeline
  std::size_t k_select = 4;
  std::size_t k_from = 2;
  std::size_t k_keywords = 2;
  std::size_t patience = 1;
  double threshold = kDefaultThreshold;
  std::string backend = "encoder";
  std::string level = "multi";
  std::string embeddings;
  std::size_t scan_cap = kDefaultScanCap;
  std::size_t workers = 1;
  long statement_timeout_ms = 30'000;
  long example_timeout_ms = 120'000;

  // endpoints
  std::string stub_script;
  std::string sketch_url;
  std::string aligner_url;
  std::string completer_url;
  std::string encoder_url;
  std::string completer_mode = "native";
  std::string chat_model;
  std::string chat_route = "/v1/chat/completions";
  long request_timeout_ms = 60'000;
  std::size_t max_in_flight = 8;
  int retries = 2;
  long backoff_ms = 250;
};

void add_dataset_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--dataset", o.dataset, "Dataset root directory");
  cmd->add_option("--format", o.format, "Dataset layout")->check(CLI::IsMember({"spider", "kaggledbqa"}));
  cmd->add_option("--examples", o.examples, "Examples file (relative to the dataset root)");
}

void add_calibration_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--backend", o.backend, "Similarity backend")
      ->check(CLI::IsMember({"fuzzy", "embedding", "encoder"}));
  cmd->add_option("--threshold", o.threshold, "Similarity threshold r")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--level", o.level, "Matching levels")
      ->check(CLI::IsMember({"multi", "column", "table", "database"}));
  cmd->add_option("--embeddings", o.embeddings, "Word-vector file for the embedding backend");
  cmd->add_option("--scan-cap", o.scan_cap, "Distinct values read per column");
  cmd->add_option("--encoder-url", o.encoder_url, "Sentence-encoder endpoint");
}

void add_endpoint_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--stub-script", o.stub_script, "Serve every endpoint from a stub script");
  cmd->add_option("--sketch-url", o.sketch_url, "Sketch provider endpoint");
  cmd->add_option("--aligner-url", o.aligner_url, "Aligner endpoint");
  cmd->add_option("--completer-url", o.completer_url, "Completer endpoint");
  cmd->add_option("--completer-mode", o.completer_mode, "Completer wire format")
      ->check(CLI::IsMember({"native", "chat"}));
  cmd->add_option("--chat-model", o.chat_model, "Model name sent in chat mode");
  cmd->add_option("--chat-route", o.chat_route, "Route used in chat mode");
  cmd->add_option("--request-timeout-ms", o.request_timeout_ms, "Per-request timeout");
  cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent requests per endpoint");
  cmd->add_option("--retries", o.retries, "Retries after a failed request");
  cmd->add_option("--backoff-ms", o.backoff_ms, "First retry delay");
}

void add_pipeline_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--k-select", o.k_select, "SELECT candidates (K1)");
  cmd->add_option("--k-from", o.k_from, "FROM candidates (K2)");
  cmd->add_option("--k-keywords", o.k_keywords, "Keyword candidates (K3)");
  cmd->add_option("--patience", o.patience, "Error-feedback rewrites per sketch");
  cmd->add_option("--statement-timeout-ms", o.statement_timeout_ms, "Per-statement timeout");
  add_calibration_options(cmd, o);
  add_endpoint_options(cmd, o);
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

struct Endpoints {
  std::shared_ptr<StubScript> script;
  std::shared_ptr<SketchClient> sketch;
  std::shared_ptr<AlignerClient> aligner;
  std::shared_ptr<CompleterClient> completer;
  std::shared_ptr<EncoderClient> encoder;
};

EndpointConfig endpoint_config(const Options& o, const std::string& url, const char* token_env) {
  EndpointConfig c;
  c.base_url = url;
  c.timeout = std::chrono::milliseconds(o.request_timeout_ms);
  c.max_in_flight = o.max_in_flight;
  c.auth_token = env(token_env);
  c.retries = o.retries;
  c.backoff = std::chrono::milliseconds(o.backoff_ms);
  return c;
}

std::shared_ptr<Endpoint> make_endpoint(const Options& o, Role role, const std::string& url, const char* token_env,
                                        const std::shared_ptr<StubScript>& script) {
  auto config = endpoint_config(o, url, token_env);
  if (script) {
    config.backoff = std::chrono::milliseconds(0);
    return std::make_shared<Endpoint>(role, std::make_shared<StubTransport>(script), config);
  }
  if (url.empty()) return nullptr;
  return std::make_shared<Endpoint>(role, std::make_shared<HttpTransport>(config), config);
}

Endpoints make_endpoints(const Options& o) {
  Endpoints e;
  if (!o.stub_script.empty()) e.script = StubScript::load(o.stub_script);
  if (auto ep = make_endpoint(o, Role::SketchProvider, o.sketch_url, "SKETCH_TOKEN", e.script))
    e.sketch = std::make_shared<SketchClient>(ep);
  if (!e.script || e.script->has_section("score"))
    if (auto ep = make_endpoint(o, Role::Aligner, o.aligner_url, "ALIGNER_TOKEN", e.script))
      e.aligner = std::make_shared<AlignerClient>(ep);
  if (auto ep = make_endpoint(o, Role::Completer, o.completer_url, "COMPLETER_TOKEN", e.script)) {
    e.completer = std::make_shared<CompleterClient>(
        ep, o.completer_mode == "chat" ? CompleterMode::Chat : CompleterMode::Native, o.chat_model, o.chat_route);
  }
  if (!e.script || e.script->has_section("encode"))
    if (auto ep = make_endpoint(o, Role::Encoder, o.encoder_url, "ENCODER_TOKEN", e.script))
      e.encoder = std::make_shared<EncoderClient>(ep);
  return e;
}

std::shared_ptr<const SimilarityBackend> make_backend(const Options& o, const Endpoints& e) {
  if (o.backend == "fuzzy") return std::make_shared<FuzzyBackend>();
  if (o.backend == "embedding") {
    if (o.embeddings.empty()) throw InvalidArgumentError("--backend embedding needs --embeddings");
    return std::make_shared<EmbeddingBackend>(std::make_shared<EmbeddingTable>(EmbeddingTable::load(o.embeddings)));
  }
  if (!e.encoder) {
    std::cerr << "note: no sentence encoder configured; using the fuzzy backend\n";
    return std::make_shared<FuzzyBackend>();
  }
  return std::make_shared<EncoderBackend>(e.encoder, true);
}

std::optional<MatchLevel> parse_level(const std::string& level) {
  if (level == "column") return MatchLevel::Column;
  if (level == "table") return MatchLevel::Table;
  if (level == "database") return MatchLevel::Database;
  return std::nullopt;
}

Pipeline make_pipeline(const Options& o, const Endpoints& e) {
  if (!e.sketch) throw InvalidArgumentError("no sketch provider: give --sketch-url or --stub-script");
  if (!e.completer) throw InvalidArgumentError("no completer: give --completer-url or --stub-script");
  Pipeline p;
  p.sketch_provider = e.sketch;
  p.aligner = e.aligner;
  p.completer = e.completer;
  p.generation = {o.k_select, o.k_from, o.k_keywords};
  p.generation.validate();
  p.selection.patience = o.patience;
  p.selection.similarity_threshold = o.threshold;
  p.selection.backend = make_backend(o, e);
  p.selection.single_level = parse_level(o.level);
  p.selection.scan_cap = o.scan_cap;
  p.selection.statement_timeout = std::chrono::milliseconds(o.statement_timeout_ms);
  p.selection.validate();
  return p;
}

nlohmann::ordered_json effective_config(const Options& o) {
  nlohmann::ordered_json c;
  c["k_select"] = o.k_select;
  c["k_from"] = o.k_from;
  c["k_keywords"] = o.k_keywords;
  c["patience"] = o.patience;
  c["threshold"] = o.threshold;
  c["backend"] = o.backend;
  c["level"] = o.level;
  c["scan_cap"] = o.scan_cap;
  c["statement_timeout_ms"] = o.statement_timeout_ms;
  c["completer_mode"] = o.completer_mode;
  c["stub_script"] = o.stub_script.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(o.stub_script);
  c["sampling"] = {{"temperature", 0.0}, {"top_p", 1.0}, {"frequency_penalty", 0.0}};
  return c;
}

// A database given either as a file or as a db_id inside --dataset.
struct DbTarget {
  DatabaseSchema schema;
  fs::path file;
};

DbTarget resolve_db(const Options& o) {
  if (o.db.empty()) throw InvalidArgumentError("--db is required");
  if (!o.dataset.empty()) {
    const auto format = parse_dataset_format(o.format);
    const fs::path root(o.dataset);
    const auto tables = root / (format == DatasetFormat::Spider ? "tables.json" : "KaggleDBQA_tables.json");
    const auto dir = root / (format == DatasetFormat::Spider ? "database" : "databases");
    for (auto& s : load_schema_file(tables))
      if (s.db_name() == o.db) return {std::move(s), dir / o.db / (o.db + ".sqlite")};
    throw DatasetIntegrityError("no schema for " + o.db + " in " + tables.string(), {o.db});
  }
  fs::path file(o.db);
  if (!fs::is_regular_file(file)) throw DatabaseAccessError("database file not found: " + o.db);
  return {load_schema(file), file};
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InvalidArgumentError("cannot write " + path);
  out << content;
}

// --- commands ---

int cmd_serialize(const Options& o) {
  std::vector<DatabaseSchema> schemas;
  if (!o.db.empty()) {
    schemas.push_back(resolve_db(o).schema);
  } else if (!o.dataset.empty()) {
    const auto format = parse_dataset_format(o.format);
    const fs::path root(o.dataset);
    const auto tables = root / (format == DatasetFormat::Spider ? "tables.json" : "KaggleDBQA_tables.json");
    if (!fs::exists(tables)) throw SchemaLoadError("no schema file " + tables.string());
    schemas = load_schema_file(tables);
  } else {
    throw InvalidArgumentError("give --db or --dataset");
  }
  for (const auto& s : schemas) {
    if (o.json)
      std::cout << schema_to_json(s).dump() << "\n";
    else
      std::cout << serialize_schema(s) << "\n";
  }
  return kExitOk;
}

int cmd_translate(const Options& o) {
  if (o.question.empty()) throw InvalidArgumentError("--question is required");
  const auto target = resolve_db(o);
  const auto endpoints = make_endpoints(o);
  const auto pipeline = make_pipeline(o, endpoints);
  auto db = Connection::open(target.file, Connection::Mode::ReadOnly);
  const auto result = translate(pipeline, o.question, target.schema, db);
  if (!o.trace.empty()) {
    nlohmann::ordered_json t;
    t["config"] = effective_config(o);
    t["question"] = o.question;
    t["result"] = to_json(result);
    write_text(o.trace, t.dump(2) + "\n");
  }
  std::cout << result.sql << "\n";
  return result.selection.status == SelectionStatus::Exhausted ? kExitExhausted : kExitOk;
}

int cmd_calibrate(const Options& o) {
  if (o.sql.empty()) throw InvalidArgumentError("--sql is required");
  const auto target = resolve_db(o);
  const auto parsed = sql::parse_sql(o.sql);
  const auto endpoints = make_endpoints(o);
  const auto backend = make_backend(o, endpoints);
  auto db = Connection::open(target.file, Connection::Mode::ReadOnly);
  const CalibrationOptions opts{o.scan_cap};
  const auto level = parse_level(o.level);
  const auto feedback = level ? single_level_match(db, target.schema, parsed, o.threshold, *backend, *level, opts)
                              : multi_level_match(db, target.schema, parsed, o.threshold, *backend, opts);
  const auto rewritten = apply_replacements(target.schema, parsed, feedback);
  if (o.json) {
    nlohmann::ordered_json out;
    out["sql"] = rewritten.original_text();
    out["feedback"] = to_json(feedback);
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << rewritten.original_text() << "\n";
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o) {
  if (o.dataset.empty()) throw InvalidArgumentError("--dataset is required");
  const auto dataset = load_dataset(o.dataset, parse_dataset_format(o.format),
                                    o.examples.empty() ? std::nullopt : std::optional<fs::path>(o.examples));
  for (const auto& d : dataset.diagnostics) std::cerr << "dataset: " << d << "\n";
  const auto endpoints = make_endpoints(o);
  const auto pipeline = make_pipeline(o, endpoints);

  std::span<const BenchmarkExample> examples(dataset.examples);
  if (o.limit > 0 && o.limit < examples.size()) examples = examples.first(o.limit);
  EvalConfig ec;
  ec.workers = o.workers;
  ec.example_timeout = std::chrono::milliseconds(o.example_timeout_ms);
  ec.statement_timeout = std::chrono::milliseconds(o.statement_timeout_ms);
  ec.keep_traces = !o.trace.empty() || !o.out.empty();
  auto report = evaluate(dataset, examples, pipeline_runner(pipeline), ec);
  report.config = effective_config(o);
  report.config["dataset"] = o.dataset;
  report.config["format"] = o.format;
  report.config["workers"] = o.workers;

  if (!o.out.empty()) write_text(o.out, to_json(report, !o.no_timing).dump(2) + "\n");
  if (!o.trace.empty()) {
    auto traces = nlohmann::ordered_json::array();
    for (const auto& r : report.examples) traces.push_back({{"index", r.index}, {"trace", r.trace}});
    write_text(o.trace, traces.dump(2) + "\n");
  }
  std::ostringstream summary;
  write_summary(summary, report);
  if (!o.summary.empty()) write_text(o.summary, summary.str());
  std::cout << summary.str();
  return kExitOk;
}

int cmd_derive_train(const Options& o) {
  if (o.dataset.empty()) throw InvalidArgumentError("--dataset is required");
  const auto dataset = load_dataset(o.dataset, parse_dataset_format(o.format),
                                    o.examples.empty() ? std::nullopt : std::optional<fs::path>(o.examples));
  for (const auto& d : dataset.diagnostics) std::cerr << "dataset: " << d << "\n";
  const fs::path out_dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(out_dir);

  std::vector<LabeledExample> labeled;
  std::span<const BenchmarkExample> examples(dataset.examples);
  if (o.limit > 0 && o.limit < examples.size()) examples = examples.first(o.limit);
  for (const auto& ex : examples) labeled.push_back({ex.question, &dataset.schema(ex.db_id), ex.gold_sql});
  const auto derived = derive_training_records(labeled);

  std::ofstream sketch_out(out_dir / "sketch_records.jsonl");
  for (const auto& r : derived.records) sketch_out << to_json(r).dump() << "\n";
  for (const auto& d : derived.diagnostics) std::cerr << "diagnostic: " << d << "\n";

  // Aligner negatives: provider hypotheses when configured, else the gold
  // parts of other questions on the same database.
  const auto endpoints = make_endpoints(o);
  std::map<std::string, std::vector<SqlSketch>> by_db;
  std::vector<std::optional<SqlSketch>> gold(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    try {
      gold[i] = extract_sketch_from_sql(examples[i].gold_sql, dataset.schema(examples[i].db_id));
      by_db[examples[i].db_id].push_back(*gold[i]);
    } catch (const Error&) {
    }
  }
  std::ofstream aligner_out(out_dir / "aligner_records.jsonl");
  std::size_t aligner_count = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!gold[i]) continue;
    const auto& ex = examples[i];
    std::vector<SketchPart> selects{gold[i]->select_part};
    std::vector<SketchPart> keywords{gold[i]->keywords_part};
    if (endpoints.sketch) {
      const auto& schema = dataset.schema(ex.db_id);
      selects.clear();
      keywords.clear();
      for (const auto& h : endpoints.sketch->request_candidates(
               build_task_input(instruction_for(SketchKind::Select), ex.question, schema), o.k_select))
        if (!h.empty()) selects.emplace_back(SketchKind::Select, h);
      for (const auto& h : endpoints.sketch->request_candidates(
               build_task_input(instruction_for(SketchKind::Keywords), ex.question, schema), o.k_keywords))
        if (parse_keywords(h)) keywords.emplace_back(SketchKind::Keywords, h);
      if (selects.empty() || keywords.empty()) continue;
    } else {
      for (const auto& other : by_db[ex.db_id]) {
        if (selects.size() < o.k_select && !parts_match(other.select_part.content(), gold[i]->select_part.content()))
          selects.push_back(other.select_part);
        if (keywords.size() < o.k_keywords &&
            !parts_match(other.keywords_part.content(), gold[i]->keywords_part.content()))
          keywords.push_back(other.keywords_part);
      }
    }
    const auto pairs = combine_candidates(selects, keywords);
    for (const auto& r : derive_aligner_records(ex.question, pairs, gold[i]->select_part, gold[i]->keywords_part)) {
      aligner_out << to_json(r).dump() << "\n";
      ++aligner_count;
    }
  }
  std::cout << "sketch_records " << derived.records.size() << "\n"
            << "aligner_records " << aligner_count << "\n"
            << "diagnostics " << derived.diagnostics.size() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketch-based natural-language-to-SQL translation"};
  app.set_config("--config", "", "Configuration file (TOML); flags override it");
  app.require_subcommand(1);
  Options o;

  auto* serialize = app.add_subcommand("serialize", "Print the indexed serialization of a schema");
  add_dataset_options(serialize, o);
  serialize->add_option("--db", o.db, "SQLite file, or db_id with --dataset");
  serialize->add_flag("--json", o.json, "Structured schema instead of text");

  auto* translate_cmd = app.add_subcommand("translate", "Translate one question into SQL");
  add_dataset_options(translate_cmd, o);
  translate_cmd->add_option("--db", o.db, "SQLite file, or db_id with --dataset");
  translate_cmd->add_option("--question", o.question, "Natural-language question");
  translate_cmd->add_option("--trace", o.trace, "Write the selection trace JSON here");
  add_pipeline_options(translate_cmd, o);

  auto* calibrate = app.add_subcommand("calibrate", "Ground the string predicates of a query in the database");
  add_dataset_options(calibrate, o);
  calibrate->add_option("--db", o.db, "SQLite file, or db_id with --dataset");
  calibrate->add_option("--sql", o.sql, "SQL query to calibrate");
  calibrate->add_flag("--json", o.json, "Print the feedback as well");
  add_calibration_options(calibrate, o);
  add_endpoint_options(calibrate, o);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Execution accuracy over a benchmark");
  add_dataset_options(evaluate_cmd, o);
  evaluate_cmd->add_option("--limit", o.limit, "Evaluate only the first N examples");
  evaluate_cmd->add_option("--workers", o.workers, "Examples evaluated concurrently")->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--out", o.out, "Report JSON path");
  evaluate_cmd->add_option("--trace", o.trace, "Per-example trace JSON path");
  evaluate_cmd->add_option("--summary", o.summary, "Summary table path");
  evaluate_cmd->add_flag("--no-timing", o.no_timing, "Leave latencies out of the report");
  evaluate_cmd->add_option("--example-timeout-ms", o.example_timeout_ms, "Per-example time budget");
  add_pipeline_options(evaluate_cmd, o);

  auto* derive = app.add_subcommand("derive-train", "Write sketch and aligner training records");
  add_dataset_options(derive, o);
  derive->add_option("--out", o.out, "Output directory");
  derive->add_option("--limit", o.limit, "Use only the first N examples");
  derive->add_option("--k-select", o.k_select, "SELECT candidates per question");
  derive->add_option("--k-keywords", o.k_keywords, "Keyword candidates per question");
  add_endpoint_options(derive, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (*serialize) return cmd_serialize(o);
    if (*translate_cmd) return cmd_translate(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*evaluate_cmd) return cmd_evaluate(o);
    if (*derive) return cmd_derive_train(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
