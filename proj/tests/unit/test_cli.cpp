#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SQLSKETCH_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli: usage errors exit 1, help exits 0") {
  CHECK(run("").code == 1);
  CHECK(run("--help").code == 0);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("calibrate --threshold 2 --db x --sql y").code == 1);
}

TEST_CASE("cli: serialize") {
  const auto dir = fixtures::temp_dir("cli-ser");
  const auto db = fixtures::create_fig1_db(dir);
  const auto r = run("serialize --db " + q(db));
  CHECK(r.code == 0);
  CHECK(r.out.rfind("school: t0: Course (c0: id, c1: course, c2: teacher) t1: Student", 0) == 0);
  const auto j = nlohmann::json::parse(run("serialize --json --db " + q(db)).out);
  CHECK(j["db_name"] == "school");

  const auto root = fixtures::create_spider_fixture(fixtures::temp_dir("cli-ds"), 3);
  const auto by_id = run("serialize --dataset " + q(root) + " --db shop");
  CHECK(by_id.code == 0);
  CHECK(by_id.out.rfind("shop: t0: products", 0) == 0);
  CHECK(run("serialize --db /nonexistent.sqlite").code == 1);
}

TEST_CASE("cli: calibrate") {
  const auto dir = fixtures::temp_dir("cli-cal");
  const auto db = fixtures::create_fig1_db(dir);
  const auto r = run("calibrate --backend fuzzy --db " + q(db) +
                     " --sql \"SELECT course FROM Student WHERE given_name = 'wards'\"");
  CHECK(r.code == 0);
  CHECK(r.out == "SELECT course FROM Student WHERE last_name = 'ward'\n");
  const auto col = run("calibrate --backend fuzzy --level column --db " + q(db) +
                       " --sql \"SELECT course FROM Student WHERE given_name = 'wards'\"");
  CHECK(col.out == "SELECT course FROM Student WHERE given_name = 'wards'\n");
  const auto j = nlohmann::json::parse(
      run("calibrate --json --db " + q(db) + " --sql \"SELECT course FROM Student WHERE given_name = 'timy'\"").out);
  CHECK(j["sql"] == "SELECT course FROM Student WHERE given_name = 'timmy'");
  CHECK(j["feedback"][0]["match"]["score"] == 0.75);
  CHECK(run("calibrate --db " + q(db) + " --sql \"DELETE FROM Student\"").code == 1);

  std::ofstream(dir / "vec.txt") << "math 1 0\nphysics 0 1\n";
  CHECK(run("calibrate --backend embedding --embeddings " + q(dir / "vec.txt") + " --db " + q(db) +
            " --sql \"SELECT 1 FROM Course WHERE course = 'maths'\"")
            .code == 0);
  CHECK(run("calibrate --backend embedding --db " + q(db) + " --sql \"SELECT 1\"").code == 1);
}

TEST_CASE("cli: translate with a stub script and a trace") {
  const auto dir = fixtures::temp_dir("cli-tr");
  const auto db = fixtures::create_fig1_db(dir);
  fixtures::write_json(dir / "stub.json", fixtures::fig1_script(sqlsketch::load_schema(db)));
  const auto r = run("translate --db " + q(db) + " --stub-script " + q(dir / "stub.json") + " --question \"" +
                     fixtures::kFig1Question + "\" --trace " + q(dir / "trace.json"));
  CHECK(r.code == 0);
  CHECK(r.out == std::string(fixtures::kFig1Gold) + "\n");
  const auto t = nlohmann::json::parse(slurp(dir / "trace.json"));
  CHECK(t["result"]["selection"]["status"] == "Selected");
  CHECK(t["config"]["k_select"] == 4);
  CHECK(t["config"]["backend"] == "encoder");

  // every sketch Null: status Exhausted, exit code 2
  auto script = fixtures::fig1_script(sqlsketch::load_schema(db));
  script["complete"] = {{"*", {"SELECT course FROM Student WHERE score > 1000"}}};
  fixtures::write_json(dir / "null.json", script);
  CHECK(run("translate --db " + q(db) + " --stub-script " + q(dir / "null.json") + " --question \"" +
            fixtures::kFig1Question + "\"")
            .code == 2);

  CHECK(run("translate --db " + q(db) + " --question \"x\"").code == 1);  // no endpoints
}

TEST_CASE("cli: evaluate writes report, trace and summary; config file is honoured") {
  const auto dir = fixtures::temp_dir("cli-eval");
  const auto root = fixtures::create_spider_fixture(dir / "ds", 10);
  const auto ds = sqlsketch::load_dataset(root, sqlsketch::DatasetFormat::Spider);
  fixtures::write_json(dir / "stub.json", fixtures::gold_echo_script(ds, ds.examples, {1}));
  std::ofstream(dir / "run.toml") << "[evaluate]\nworkers = 2\nlimit = 8\n";
  const auto r = run("--config " + q(dir / "run.toml") + " evaluate --dataset " + q(root) + " --stub-script " +
                     q(dir / "stub.json") + " --no-timing --out " + q(dir / "report.json") + " --trace " +
                     q(dir / "trace.json") + " --summary " + q(dir / "summary.txt"));
  CHECK(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["total"] == 8);
  CHECK(report["correct"] == 7);
  CHECK(report["config"]["workers"] == 2);
  CHECK_FALSE(report["examples"][0].contains("latency_ms"));
  CHECK(nlohmann::json::parse(slurp(dir / "trace.json")).size() == 8);
  CHECK(slurp(dir / "summary.txt") == r.out);
  CHECK(r.out.find("execution accuracy    0.8750") != std::string::npos);

  CHECK(run("evaluate --dataset " + q(dir / "missing") + " --stub-script " + q(dir / "stub.json")).code == 1);
}

TEST_CASE("cli: derive-train") {
  const auto dir = fixtures::temp_dir("cli-derive");
  const auto root = fixtures::create_spider_fixture(dir / "ds", 10);
  const auto r = run("derive-train --dataset " + q(root) + " --out " + q(dir / "out"));
  CHECK(r.code == 0);
  CHECK(r.out.find("sketch_records 30\n") != std::string::npos);
  std::ifstream in(dir / "out" / "sketch_records.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("instruction"));
    CHECK(j.contains("label"));
    ++lines;
  }
  CHECK(lines == 30);
  std::ifstream al(dir / "out" / "aligner_records.jsonl");
  std::size_t positives = 0, total = 0;
  for (std::string line; std::getline(al, line); ++total) positives += nlohmann::json::parse(line)["label"] == 1;
  CHECK(total > positives);
  CHECK(positives == 10);
}
