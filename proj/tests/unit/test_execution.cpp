#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "sqlsketch/errors.hpp"
#include "sqlsketch/execution.hpp"

using namespace sqlsketch;

namespace {

Connection fig1() {
  static const auto file = fixtures::create_fig1_db(fixtures::temp_dir("exec"));
  return Connection::open(file);
}

}  // namespace

TEST_CASE("three-way outcomes") {
  auto db = fig1();
  const auto rows = execute(db, fixtures::kFig1Gold);
  REQUIRE(rows.is_rows());
  CHECK(rows.result().rows() == std::vector<Row>{{Value(std::string("math"))}});

  const auto none = execute(db, fixtures::kFig1Completion);
  CHECK(none.is_null());
  CHECK(none.result().empty());

  const auto nulls = execute(db, "SELECT max(score) FROM Student WHERE given_name = 'nobody'");
  CHECK(nulls.is_null());
  CHECK(nulls.result().all_null());

  const auto err = execute(db, "SELECT nope FROM Student");
  REQUIRE(err.is_error());
  CHECK(err.message() == "no such column: nope");
  CHECK_THROWS(err.result());
  CHECK(to_string(err.kind()) == "Error");
}

TEST_CASE("only single read-only statements run") {
  auto db = fig1();
  CHECK(execute(db, "DELETE FROM Student").message() == "only read-only statements are allowed");
  CHECK(execute(db, "SELECT 1; SELECT 2").message() == "multiple statements are not allowed");
  CHECK(execute(db, "SELECT 1;").is_rows());
  CHECK(execute(db, "SELECT count(*) FROM Student").result().rows()[0][0] == Value(std::int64_t{5}));
}

TEST_CASE("statement timeout") {
  auto db = fig1();
  const auto slow = execute(db,
                            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) "
                            "SELECT count(*) FROM c",
                            std::chrono::milliseconds(50));
  REQUIRE(slow.is_error());
  CHECK(slow.message() == "statement timed out after 50 ms");
}

TEST_CASE("missing database file is an Error outcome") {
  const auto out = execute(std::filesystem::path("/nonexistent/x.sqlite"), "SELECT 1");
  CHECK(out.is_error());
}

TEST_CASE("result set shape is validated") {
  CHECK_THROWS_AS(ResultSet(2, {{Value(std::int64_t{1})}}), InvalidArgumentError);
}

TEST_CASE("value equality") {
  CHECK(values_equal(Value(0.30000001), Value(0.3)));
  CHECK(values_equal(Value(std::int64_t{3}), Value(3.0)));
  CHECK_FALSE(values_equal(Value(std::int64_t{3}), Value(std::int64_t{4})));
  CHECK_FALSE(values_equal(Value(std::monostate{}), Value(std::int64_t{0})));
  CHECK(values_equal(Value(std::monostate{}), Value(std::monostate{})));
  CHECK_FALSE(values_equal(Value(std::string("3")), Value(std::int64_t{3})));
  CHECK_FALSE(values_equal(Value(0.3), Value(0.31)));
}

TEST_CASE("result equality: order, multiplicity and tolerance") {
  auto s = [](const char* v) { return Value(std::string(v)); };
  const ResultSet a(1, {{s("x")}, {s("y")}, {s("y")}});
  const ResultSet b(1, {{s("y")}, {s("x")}, {s("y")}});
  const ResultSet c(1, {{s("y")}, {s("x")}, {s("x")}});
  CHECK(results_equal(b, a, false));
  CHECK_FALSE(results_equal(b, a, true));
  CHECK_FALSE(results_equal(c, a, false));
  CHECK_FALSE(results_equal(ResultSet(2, {}), ResultSet(1, {}), false));
  CHECK(results_equal(ResultSet(1, {{Value(0.30000001)}}), ResultSet(1, {{Value(0.3)}}), false));

  std::mt19937 rng(9);
  std::vector<Row> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({Value(std::int64_t(rng() % 5)), Value(0.1 * (rng() % 7))});
  auto shuffled = rows;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(results_equal(ResultSet(2, shuffled), ResultSet(2, rows), false));
}

TEST_CASE("top-level ORDER BY detection") {
  CHECK(has_top_level_order_by("SELECT a FROM t ORDER BY a"));
  CHECK_FALSE(has_top_level_order_by("SELECT a FROM (SELECT a FROM t ORDER BY a LIMIT 3)"));
  CHECK_FALSE(has_top_level_order_by("SELECT a FROM t"));
}

TEST_CASE("ordered comparison against live queries") {
  auto db = fig1();
  const auto gold = "SELECT given_name FROM Student ORDER BY score DESC";
  const auto pred = execute(db, "SELECT given_name FROM Student ORDER BY score ASC");
  const auto g = execute(db, gold);
  CHECK_FALSE(results_equal(pred.result(), g.result(), has_top_level_order_by(gold)));
  CHECK(results_equal(pred.result(), g.result(), false));
}
