#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>

#include "sqlsketch/selection.hpp"
#include "sqlsketch/sqlite.hpp"
#include "sqlsketch/text.hpp"

namespace fixtures {

using namespace sqlsketch;

fs::path temp_dir(std::string_view name) {
  static std::atomic<int> counter{0};
  auto dir = fs::temp_directory_path() /
             ("sqlsketch-" + std::string(name) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path create_database(const fs::path& file, std::string_view script) {
  fs::create_directories(file.parent_path());
  fs::remove(file);
  auto db = Connection::open(file, Connection::Mode::Create);
  db.exec(script);
  return file;
}

const char* const kFig1Script = R"sql(
CREATE TABLE Course (id INTEGER PRIMARY KEY, course TEXT, teacher TEXT);
CREATE TABLE Student (id INTEGER PRIMARY KEY, given_name TEXT, last_name TEXT, score REAL, course TEXT);
INSERT INTO Course VALUES (1, 'math', 'jordy wu'), (2, 'physics', 'ann smith'), (3, 'history', 'li wei'),
                          (4, 'art', 'maria lopez');
INSERT INTO Student VALUES (1, 'timmy', 'ward', 92, 'math'), (2, 'edward', 'stone', 85, 'physics'),
                           (3, 'anna', 'lee', 78, 'math'), (4, 'bob', 'ward', 70, 'history'),
                           (5, 'timmy', 'lee', 88, 'art');
)sql";

fs::path create_fig1_db(const fs::path& dir, std::string_view db_name) {
  return create_database(dir / (std::string(db_name) + ".sqlite"), kFig1Script);
}

namespace {

ColumnDef col(std::string name, ColumnType t = ColumnType::Text) { return {std::move(name), t}; }

}  // namespace

DatabaseSchema car1_schema() {
  using T = ColumnType;
  std::vector<TableDef> tables{
      {"model_list", {col("modelid", T::Integer), col("maker", T::Integer), col("model")}},
      {"continents", {col("contid", T::Integer), col("continent")}},
      {"car_names", {col("makeid", T::Integer), col("model"), col("make")}},
      {"car_makers", {col("id", T::Integer), col("maker"), col("fullname"), col("country")}},
      {"cars_data",
       {col("id", T::Integer), col("mpg"), col("cylinders", T::Integer), col("edispl", T::Real),
        col("horsepower"), col("weight", T::Integer), col("accelerate", T::Real), col("year", T::Integer)}},
      {"countries", {col("countryid", T::Integer), col("countryname"), col("continent", T::Integer)}},
  };
  std::vector<ForeignKeyDef> fks{
      {2, 1, 0, 2},  // car_names.model = model_list.model
      {3, 3, 5, 0},  // car_makers.country = countries.countryid
      {4, 0, 2, 0},  // cars_data.id = car_names.makeid
      {5, 2, 1, 0},  // countries.continent = continents.contid
  };
  return DatabaseSchema("car_1", std::move(tables), std::move(fks));
}

DatabaseSchema stadium_schema() {
  using T = ColumnType;
  return DatabaseSchema("concert_singer", {{"stadium",
                                            {col("stadium_id", T::Integer), col("name"), col("highest", T::Integer),
                                             col("lowest", T::Integer), col("average", T::Integer)}}});
}

std::size_t lcs_dp(std::string_view a, std::string_view b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

double fuzzy_oracle(std::string_view a, std::string_view b) {
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());
  const double indel = m + n - 2.0 * static_cast<double>(lcs_dp(a, b));
  return std::clamp(1.0 - indel / std::min(m, n), 0.0, 1.0);
}

nlohmann::json spider_record(const DatabaseSchema& schema) {
  nlohmann::json r;
  r["db_id"] = schema.db_name();
  auto tables = nlohmann::json::array();
  auto columns = nlohmann::json::array({{-1, "*"}});
  auto types = nlohmann::json::array({"text"});
  std::vector<std::vector<std::size_t>> ids;
  for (std::size_t t = 0; t < schema.tables().size(); ++t) {
    const auto& table = schema.tables()[t];
    tables.push_back(table.name);
    ids.emplace_back();
    for (const auto& c : table.columns) {
      ids.back().push_back(columns.size());
      columns.push_back({static_cast<int>(t), c.name});
      types.push_back(c.declared_type == ColumnType::Text ? "text" : "number");
    }
  }
  auto fks = nlohmann::json::array();
  for (const auto& fk : schema.foreign_keys())
    fks.push_back({ids[fk.from_table][fk.from_column], ids[fk.to_table][fk.to_column]});
  r["table_names_original"] = tables;
  r["table_names"] = tables;
  r["column_names_original"] = columns;
  r["column_names"] = columns;
  r["column_types"] = types;
  r["foreign_keys"] = fks;
  r["primary_keys"] = nlohmann::json::array();
  return r;
}

namespace {

const char* const kShopScript = R"sql(
CREATE TABLE products (id INTEGER PRIMARY KEY, name TEXT, category TEXT, price REAL);
CREATE TABLE orders (id INTEGER PRIMARY KEY, product_id INTEGER REFERENCES products(id), customer TEXT,
                     quantity INTEGER);
INSERT INTO products VALUES (1, 'hammer', 'tools', 12.5), (2, 'wrench', 'tools', 8.0), (3, 'lamp', 'lighting', 30.0),
                            (4, 'bulb', 'lighting', 2.25), (5, 'saw', 'tools', 21.0);
INSERT INTO orders VALUES (1, 1, 'olivia', 2), (2, 3, 'noah', 1), (3, 1, 'noah', 5), (4, 5, 'emma', 1),
                          (5, 4, 'olivia', 10);
)sql";

struct Template {
  const char* db;
  const char* question;
  const char* sql;
};

const Template kTemplates[] = {
    {"school", "Which course has the highest score for the student named timmy ward?",
     "SELECT course FROM Student WHERE given_name = 'timmy' AND last_name = 'ward' ORDER BY score LIMIT 1"},
    {"school", "List the names of students taking math.",
     "SELECT given_name, last_name FROM Student WHERE course = 'math'"},
    {"school", "How many students are there?", "SELECT count(*) FROM Student"},
    {"school", "Who teaches physics?", "SELECT teacher FROM Course WHERE course = 'physics'"},
    {"school", "Which students take a course taught by jordy wu?",
     "SELECT T1.given_name FROM Student AS T1 JOIN Course AS T2 ON T1.course = T2.course WHERE T2.teacher = 'jordy wu'"},
    {"school", "What is the average score per course?", "SELECT course, avg(score) FROM Student GROUP BY course"},
    {"shop", "List tools from the most to the least expensive.",
     "SELECT name FROM products WHERE category = 'tools' ORDER BY price DESC"},
    {"shop", "How many items did each customer order?", "SELECT customer, sum(quantity) FROM orders GROUP BY customer"},
    {"shop", "Who ordered a hammer?",
     "SELECT T2.customer FROM products AS T1 JOIN orders AS T2 ON T1.id = T2.product_id WHERE T1.name = 'hammer'"},
    {"shop", "How many products cost more than 10?", "SELECT count(*) FROM products WHERE price > 10"},
};

}  // namespace

fs::path create_spider_fixture(const fs::path& dir, std::size_t n) {
  const auto school = create_fig1_db(dir / "database" / "school", "school");
  const auto shop = create_database(dir / "database" / "shop" / "shop.sqlite", kShopScript);
  nlohmann::json tables = nlohmann::json::array();
  tables.push_back(spider_record(load_schema(school, "school")));
  tables.push_back(spider_record(load_schema(shop, "shop")));
  {
    std::ofstream out(dir / "tables.json");
    out << tables.dump(1);
  }
  nlohmann::json examples = nlohmann::json::array();
  constexpr std::size_t kCount = sizeof(kTemplates) / sizeof(kTemplates[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = kTemplates[i % kCount];
    examples.push_back({{"db_id", t.db}, {"question", "(" + std::to_string(i) + ") " + t.question}, {"query", t.sql}});
  }
  std::ofstream out(dir / "dev.json");
  out << examples.dump(1);
  return dir;
}

namespace {

void add(nlohmann::ordered_json& script, const std::string& section, const std::string& key,
         nlohmann::ordered_json response) {
  script[section][key] = nlohmann::ordered_json::array({std::move(response)});
}

std::string wrong_query(const std::string& db) {
  return db == "school" ? "SELECT teacher FROM Course" : "SELECT name FROM products";
}

}  // namespace

nlohmann::ordered_json gold_echo_script(const Dataset& dataset, std::span<const BenchmarkExample> examples,
                                        const std::set<std::size_t>& wrong) {
  nlohmann::ordered_json script = {{"generate", nlohmann::ordered_json::object()},
                                   {"complete", nlohmann::ordered_json::object()}};
  for (const auto& ex : examples) {
    const auto& schema = dataset.schema(ex.db_id);
    const auto gold = extract_sketch_from_sql(ex.gold_sql, schema);
    add(script, "generate", build_task_input(instruction_for(SketchKind::Select), ex.question, schema),
        nlohmann::ordered_json::array({gold.select_part.content()}));
    add(script, "generate", build_task_input(instruction_for(SketchKind::From), ex.question, schema),
        nlohmann::ordered_json::array({gold.from_part.content()}));
    add(script, "generate", build_task_input(instruction_for(SketchKind::Keywords), ex.question, schema),
        nlohmann::ordered_json::array({gold.keywords_part.content()}));
    add(script, "complete", completion_prompt(ex.question, schema, gold),
        wrong.count(ex.index) ? wrong_query(ex.db_id) : ex.gold_sql);
  }
  return script;
}

nlohmann::ordered_json fig1_script(const DatabaseSchema& schema) {
  const std::string q = kFig1Question;
  nlohmann::ordered_json script;
  add(script, "generate", build_task_input(instruction_for(SketchKind::Select), q, schema),
      {"SELECT t1.c1", "SELECT t1.c4", "SELECT t0.c1", "SELECT t1.c2"});
  add(script, "generate", build_task_input(instruction_for(SketchKind::From), q, schema), {"FROM t1", "FROM t0, t1"});
  add(script, "generate", build_task_input(instruction_for(SketchKind::Keywords), q, schema),
      {"SELECT FROM WHERE", "SELECT FROM WHERE ORDER BY LIMIT"});

  const CandidatePair best{SketchPart(SketchKind::Select, "SELECT t1.c4"),
                           SketchPart(SketchKind::Keywords, "SELECT FROM WHERE ORDER BY LIMIT"), 1, 1};
  add(script, "score", build_aligner_input(q, best), 0.9);
  add(script, "score", "*", 0.1);

  const SqlSketch first{best.select_part, SketchPart(SketchKind::From, "FROM t1"), best.keywords_part, 0};
  add(script, "complete", completion_prompt(q, schema, first), kFig1Completion);
  add(script, "complete", "~The closest database value is given_name = 'timmy'", kFig1Gold);
  add(script, "complete", "~A possibly related database value is given_name = 'timmy'", kFig1Gold);

  add(script, "encode", "timmothy", {1.0, 0.0, 0.0});
  add(script, "encode", "timmy", {0.9, 0.1, 0.0});
  add(script, "encode", "ward", {0.0, 1.0, 0.0});
  add(script, "encode", "*", {0.0, 0.0, 1.0});
  return script;
}

void write_json(const fs::path& file, const nlohmann::ordered_json& doc) {
  std::ofstream out(file);
  out << doc.dump(2);
}

}  // namespace fixtures

namespace fixtures {

namespace {

const char* const kTableNames[] = {"alpha", "beta", "gamma", "delta", "epsilon"};
const char* const kColumnNames[] = {"name", "city", "tag", "note"};

std::string random_text(std::mt19937& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> ch('a', 'e');
  std::string s(len(rng), 'a');
  for (auto& c : s) c = static_cast<char>(ch(rng));
  return s;
}

}  // namespace

CalibrationCase random_calibration_case(unsigned seed, const fs::path& dir) {
  std::mt19937 rng(seed);
  const std::size_t n_tables = 1 + rng() % 5;
  std::string script;
  std::vector<std::vector<std::string>> columns(n_tables);
  for (std::size_t t = 0; t < n_tables; ++t) {
    script += "CREATE TABLE " + std::string(kTableNames[t]) + " (id INTEGER";
    const std::size_t n_cols = 1 + rng() % 4;
    for (std::size_t c = 0; c < n_cols; ++c) {
      columns[t].push_back(kColumnNames[(t + c) % 4]);
      script += ", " + columns[t].back() + " TEXT";
    }
    script += ");\n";
    const std::size_t rows = rng() % 21;
    for (std::size_t r = 0; r < rows; ++r) {
      script += "INSERT INTO " + std::string(kTableNames[t]) + " VALUES (" + std::to_string(r);
      for (std::size_t c = 0; c < n_cols; ++c) {
        const auto roll = rng() % 10;
        script += roll == 0 ? ", NULL" : roll == 1 ? ", ''" : ", '" + random_text(rng, 6) + "'";
      }
      script += ");\n";
    }
  }
  CalibrationCase out;
  out.db = create_database(dir / ("case" + std::to_string(seed) + ".sqlite"), script);

  // one table, or two joined with aliases
  std::vector<std::size_t> from{rng() % n_tables};
  const bool join = n_tables > 1 && rng() % 2;
  if (join) {
    auto second = rng() % n_tables;
    if (second == from[0]) second = (second + 1) % n_tables;
    from.push_back(second);
  }
  const std::vector<std::string> alias = join ? std::vector<std::string>{"T1", "T2"} : std::vector<std::string>{""};
  out.sql = "SELECT id FROM " + std::string(kTableNames[from[0]]) + (join ? " AS T1 JOIN " +
            std::string(kTableNames[from[1]]) + " AS T2 ON T1.id = T2.id" : "");

  const std::size_t n_preds = 1 + rng() % 3;
  for (std::size_t p = 0; p < n_preds; ++p) {
    CalibrationCase::Pred pred;
    pred.from_tables = from;
    std::string column_text;
    if (rng() % 8 == 0) {
      column_text = "ghost";
    } else {
      const auto which = rng() % from.size();
      const auto t = from[which];
      const auto c = rng() % columns[t].size();
      const bool qualify = join && rng() % 2;
      column_text = qualify ? alias[which] + "." + columns[t][c] : columns[t][c];
      // a bare name resolves to the first FROM table that has it
      std::size_t owner = t;
      if (!qualify)
        for (auto f : from)
          if (std::find(columns[f].begin(), columns[f].end(), columns[t][c]) != columns[f].end()) {
            owner = f;
            break;
          }
      const auto& cols = columns[owner];
      const auto pos = std::find(cols.begin(), cols.end(), columns[t][c]) - cols.begin();
      pred.column = sqlsketch::ColumnLocation{owner, static_cast<std::size_t>(pos) + 1};
    }
    pred.text = random_text(rng, 7);
    const bool like = rng() % 4 == 0;
    out.sql += std::string(p == 0 ? " WHERE " : " AND ") + column_text +
               (like ? " LIKE '%" + pred.text + "%'" : " = '" + pred.text + "'");
    out.predicates.push_back(std::move(pred));
  }
  return out;
}

std::optional<OracleMatch> brute_force_match(const fs::path& db, const DatabaseSchema& schema,
                                             const CalibrationCase::Pred& pred, double threshold) {
  auto conn = Connection::open(db);
  auto values = [&](std::size_t t, std::size_t c) {
    std::vector<std::string> out;
    const auto& col = schema.tables()[t].columns[c].name;
    for (const auto& row : conn.query_all("SELECT DISTINCT " + col + " FROM " + schema.tables()[t].name +
                                          " WHERE typeof(" + col + ") = 'text' AND trim(" + col + ") <> ''"))
      out.push_back(std::get<std::string>(row[0]));
    return out;
  };
  auto text_columns = [&](std::size_t t) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < schema.tables()[t].columns.size(); ++c)
      if (schema.tables()[t].columns[c].declared_type == ColumnType::Text) out.push_back(c);
    return out;
  };
  using Key = std::pair<std::size_t, std::size_t>;
  std::vector<std::vector<Key>> levels(3);
  if (pred.column) levels[0].push_back({pred.column->table_index, pred.column->column_index});
  std::vector<std::size_t> owners = pred.column ? std::vector<std::size_t>{pred.column->table_index} : pred.from_tables;
  for (auto t : owners)
    for (auto c : text_columns(t)) levels[1].push_back({t, c});
  for (std::size_t t = 0; t < schema.tables().size(); ++t)
    for (auto c : text_columns(t)) levels[2].push_back({t, c});
  for (auto& l : levels) {
    if (pred.column) l.push_back({pred.column->table_index, pred.column->column_index});
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }

  const auto query = text::to_lower(pred.text);
  std::optional<OracleMatch> overall;
  for (int level = 0; level < 3; ++level) {
    std::optional<OracleMatch> best;
    for (const auto& [t, c] : levels[level])
      for (const auto& v : values(t, c)) {
        const double s = fuzzy_oracle(query, text::to_lower(text::trim(v)));
        const bool better = !best || s > best->score ||
                            (s == best->score && std::tie(t, c, v) < std::tie(best->table_index, best->column_index,
                                                                             best->value));
        if (better) best = OracleMatch{t, c, v, s, static_cast<MatchLevel>(level), false};
      }
    if (!best) continue;
    if (!overall || best->score > overall->score) overall = best;
    if (best->score >= threshold) return best;
  }
  if (overall) overall->below_threshold = true;
  return overall;
}

}  // namespace fixtures

namespace fixtures {

sqlsketch::Pipeline stub_pipeline(const nlohmann::ordered_json& script) {
  using namespace sqlsketch;
  auto stub = std::make_shared<StubScript>(script);
  auto transport = std::make_shared<StubTransport>(stub);
  EndpointConfig cfg;
  cfg.backoff = {};
  auto endpoint = [&](Role role) { return std::make_shared<Endpoint>(role, transport, cfg); };
  Pipeline p;
  p.sketch_provider = std::make_shared<SketchClient>(endpoint(Role::SketchProvider));
  if (stub->has_section("score")) p.aligner = std::make_shared<AlignerClient>(endpoint(Role::Aligner));
  p.completer = std::make_shared<CompleterClient>(endpoint(Role::Completer));
  if (stub->has_section("encode"))
    p.selection.backend =
        std::make_shared<EncoderBackend>(std::make_shared<EncoderClient>(endpoint(Role::Encoder)), false);
  return p;
}

}  // namespace fixtures
