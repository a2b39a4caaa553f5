#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "sqlsketch/errors.hpp"
#include "sqlsketch/harness.hpp"

using namespace sqlsketch;

namespace {

struct SpiderFixture {
  std::filesystem::path root;
  Dataset ds;
  explicit SpiderFixture(std::size_t n)
      : root(fixtures::create_spider_fixture(fixtures::temp_dir("spider"), n)),
        ds(load_dataset(root, DatasetFormat::Spider)) {}
};

}  // namespace

TEST_CASE("dataset formats") {
  CHECK(parse_dataset_format("Spider") == DatasetFormat::Spider);
  CHECK(parse_dataset_format("kaggledbqa") == DatasetFormat::KaggleDBQA);
  CHECK_THROWS_AS(parse_dataset_format("wikisql"), InvalidArgumentError);
}

TEST_CASE("spider layout loads") {
  SpiderFixture f(12);
  CHECK(f.ds.examples.size() == 12);
  CHECK(f.ds.schemas.size() == 2);
  CHECK(f.ds.examples[11].index == 11);
  CHECK(f.ds.database("shop").filename() == "shop.sqlite");
  CHECK(f.ds.diagnostics.empty());
}

TEST_CASE("missing databases are named") {
  SpiderFixture f(3);
  auto doc = nlohmann::json::parse(std::ifstream(f.root / "dev.json"));
  doc.push_back({{"db_id", "ghost"}, {"question", "q"}, {"query", "SELECT 1"}});
  doc.push_back({{"db_id", "school"}});
  fixtures::write_json(f.root / "dev.json", doc);
  try {
    load_dataset(f.root, DatasetFormat::Spider);
    FAIL("expected DatasetIntegrityError");
  } catch (const DatasetIntegrityError& e) {
    CHECK(e.missing_ids() == std::vector<std::string>{"ghost"});
  }
  CHECK_THROWS_AS(load_dataset(f.root / "nowhere", DatasetFormat::Spider), DatasetIntegrityError);
}

TEST_CASE("perturbed layout and explicit examples file") {
  SpiderFixture f(4);
  std::filesystem::rename(f.root / "tables.json", f.root / "tables_post_perturbation.json");
  std::filesystem::rename(f.root / "database", f.root / "database_post_perturbation");
  std::filesystem::rename(f.root / "dev.json", f.root / "questions_post_perturbation.json");
  const auto ds = load_dataset(f.root, DatasetFormat::Spider);
  CHECK(ds.examples.size() == 4);
  CHECK(ds.diagnostics.size() == 2);
  std::filesystem::copy(f.root / "questions_post_perturbation.json", f.root / "mine.json");
  CHECK(load_dataset(f.root, DatasetFormat::Spider, "mine.json").examples.size() == 4);
}

TEST_CASE("kaggledbqa layout loads") {
  SpiderFixture f(10);
  const auto root = fixtures::temp_dir("kaggle");
  std::filesystem::copy(f.root / "tables.json", root / "KaggleDBQA_tables.json");
  std::filesystem::copy(f.root / "database", root / "databases", std::filesystem::copy_options::recursive);
  std::filesystem::create_directories(root / "examples");
  auto all = nlohmann::json::parse(std::ifstream(f.root / "dev.json"));
  nlohmann::json school = nlohmann::json::array(), shop = nlohmann::json::array();
  for (const auto& e : all) (e["db_id"] == "school" ? school : shop).push_back(e);
  fixtures::write_json(root / "examples" / "shop_test.json", shop);
  fixtures::write_json(root / "examples" / "school_test.json", school);
  fixtures::write_json(root / "examples" / "school_fewshot.json", school);
  const auto ds = load_dataset(root, DatasetFormat::KaggleDBQA);
  CHECK(ds.examples.size() == 10);
  CHECK(ds.examples[0].db_id == "school");
}

TEST_CASE("gold against gold scores 1.0") {
  SpiderFixture f(20);
  ExampleRunner gold = [](const BenchmarkExample& ex, const DatabaseSchema&, Connection&) {
    TranslationResult r;
    r.sql = ex.gold_sql;
    r.selection.status = SelectionStatus::Selected;
    return r;
  };
  const auto report = evaluate(f.ds, f.ds.examples, gold);
  CHECK(report.total == 20);
  CHECK(report.execution_accuracy == 1.0);
  CHECK(report.status_counts.at("Selected") == 20);
}

TEST_CASE("stub pipeline reproduces gold except scripted mistakes") {
  SpiderFixture f(20);
  const auto script = fixtures::gold_echo_script(f.ds, f.ds.examples, {3, 7});
  const auto p = fixtures::stub_pipeline(script);
  EvalConfig cfg;
  cfg.workers = 4;
  const auto report = evaluate(f.ds, f.ds.examples, pipeline_runner(p), cfg);
  CHECK(report.correct == 18);
  CHECK(report.execution_accuracy == doctest::Approx(0.9));
  CHECK_FALSE(report.examples[3].match);
  CHECK(report.examples[4].match);
  CHECK(report.average_tokens > 0.0);
  CHECK(report.examples[0].tokens.prompt > 0);
  CHECK(report.examples[0].tokens.response == 17);  // gold SQL word count
  CHECK_FALSE(report.examples[0].trace.is_null());
}

TEST_CASE("per-example failures do not stop the run") {
  SpiderFixture f(5);
  ExampleRunner runner = [](const BenchmarkExample& ex, const DatabaseSchema&, Connection&) -> TranslationResult {
    if (ex.index == 2) throw CompleterUnavailableError("down");
    TranslationResult r;
    r.sql = ex.index == 3 ? "SELECT nope" : ex.gold_sql;
    return r;
  };
  const auto report = evaluate(f.ds, f.ds.examples, runner);
  CHECK(report.correct == 3);
  CHECK(report.examples[2].status == "Error");
  CHECK(report.examples[2].error == "down");
  CHECK(report.examples[3].outcome == "Error");
}

TEST_CASE("slow examples are marked Timeout") {
  SpiderFixture f(2);
  ExampleRunner runner = [](const BenchmarkExample& ex, const DatabaseSchema&, Connection&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    TranslationResult r;
    r.sql = ex.gold_sql;
    return r;
  };
  EvalConfig cfg;
  cfg.example_timeout = std::chrono::milliseconds(10);
  const auto report = evaluate(f.ds, f.ds.examples, runner, cfg);
  CHECK(report.correct == 0);
  CHECK(report.status_counts.at("Timeout") == 2);
}

TEST_CASE("judge: order sensitivity follows the gold query") {
  const auto file = fixtures::create_fig1_db(fixtures::temp_dir("judge"));
  auto db = Connection::open(file);
  CHECK(judge(db, "SELECT given_name FROM Student ORDER BY id DESC", "SELECT given_name FROM Student").match);
  CHECK_FALSE(judge(db, "SELECT given_name FROM Student ORDER BY id DESC",
                    "SELECT given_name FROM Student ORDER BY id").match);
  CHECK(judge(db, "SELECT 0.30000001", "SELECT 0.3").match);
  const auto bad_gold = judge(db, "SELECT 1", "SELECT nope FROM Student");
  CHECK(bad_gold.gold_failed);
  CHECK_FALSE(bad_gold.match);
}

TEST_CASE("token counting covers completer traffic only") {
  std::vector<CallRecord> calls(3);
  calls[0].role = Role::Completer;
  calls[0].request = {{"prompt", "a b c"}};
  calls[0].response = {{"text", "SELECT 1"}};
  calls[1].role = Role::SketchProvider;
  calls[1].request = {{"input", "x y z w"}};
  calls[2].role = Role::Completer;
  calls[2].request = {{"messages", {{{"role", "user"}, {"content", "d e"}}}}};
  calls[2].response = {{"choices", {{{"message", {{"content", "SELECT 2 ;"}}}}}}};
  const auto t = measure_tokens(calls);
  CHECK(t.prompt == 5);
  CHECK(t.response == 5);
}

TEST_CASE("reports serialize deterministically") {
  SpiderFixture f(10);
  const auto p = fixtures::stub_pipeline(fixtures::gold_echo_script(f.ds, f.ds.examples));
  EvalConfig cfg;
  cfg.workers = 3;
  const auto a = to_json(evaluate(f.ds, f.ds.examples, pipeline_runner(p), cfg), false).dump();
  const auto b = to_json(evaluate(f.ds, f.ds.examples, pipeline_runner(p), cfg), false).dump();
  CHECK(a == b);
  std::ostringstream summary;
  write_summary(summary, evaluate(f.ds, f.ds.examples, pipeline_runner(p)));
  CHECK(summary.str().find("execution accuracy    1.0000") != std::string::npos);
}
