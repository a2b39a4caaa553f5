#include "sqlsketch/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

std::string_view to_string(MatchLevel level) {
  switch (level) {
    case MatchLevel::Column:
      return "Column";
    case MatchLevel::Table:
      return "Table";
    case MatchLevel::Database:
      break;
  }
  return "Database";
}

bool CalibrationFeedback::changes_query(bool include_below_threshold) const {
  for (const auto& r : replacements) {
    if (r.match.below_threshold && !include_below_threshold) continue;
    const bool same_column = r.original_location && r.original_location->table_index == r.match.table_index &&
                             r.original_location->column_index == r.match.column_index;
    if (!same_column || r.match.value != match_text(r.original)) return true;
  }
  return false;
}

std::vector<FromTable> from_tables(const DatabaseSchema& schema, const sql::ParsedQuery& query) {
  std::vector<FromTable> out;
  sql::for_each_core(query.tree(), [&](const sql::SelectCore& core, int) {
    for (const auto* ref : sql::tables_of(core)) {
      if (ref->name.empty()) continue;
      auto idx = schema.find_table(ref->name);
      if (!idx) continue;
      out.push_back({*idx, ref->alias.empty() ? ref->name : ref->alias});
    }
  });
  return out;
}

std::optional<ColumnLocation> resolve_predicate_column(const DatabaseSchema& schema,
                                                       const sql::ParsedQuery& query,
                                                       const Predicate& predicate) {
  const auto tables = from_tables(schema, query);
  const auto qualifier = predicate.qualifier();
  const auto column = predicate.bare_column();
  auto lookup = [&](std::size_t t) -> std::optional<ColumnLocation> {
    if (auto c = schema.tables()[t].find_column(column)) return ColumnLocation{t, *c};
    return std::nullopt;
  };
  if (!qualifier.empty()) {
    for (const auto& ft : tables)
      if (text::iequals(ft.alias, qualifier))
        if (auto loc = lookup(ft.table_index)) return loc;
    if (auto t = schema.find_table(qualifier)) return lookup(*t);
    return std::nullopt;
  }
  for (const auto& ft : tables)
    if (auto loc = lookup(ft.table_index)) return loc;
  return std::nullopt;
}

// --- scanning ---

ValueScanner::ValueScanner(Connection& db, const DatabaseSchema& schema, std::size_t cap)
    : db_(db), schema_(schema), cap_(cap) {}

const std::vector<std::string>& ValueScanner::values(std::size_t table_index, std::size_t column_index) {
  auto key = std::make_pair(table_index, column_index);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const auto& table = schema_.tables().at(table_index);
  const auto col = quote_identifier(table.columns.at(column_index).name);
  const std::string sql = "SELECT DISTINCT " + col + " FROM " + quote_identifier(table.name) + " WHERE typeof(" +
                          col + ") = 'text' AND trim(" + col + ") <> '' LIMIT " + std::to_string(cap_);
  std::vector<std::string> out;
  db_.query(sql, {}, [&](const std::vector<Value>& row) {
    if (const auto* s = std::get_if<std::string>(&row[0])) out.push_back(*s);
  });
  return cache_.emplace(key, std::move(out)).first->second;
}

namespace {

using Column = std::pair<std::size_t, std::size_t>;

void add_text_columns(const DatabaseSchema& schema, std::size_t t, std::vector<Column>& cols) {
  const auto& columns = schema.tables()[t].columns;
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c].declared_type == ColumnType::Text) cols.emplace_back(t, c);
}

std::vector<Column> level_columns(MatchLevel level, const DatabaseSchema& schema, const sql::ParsedQuery& query,
                                  const std::optional<ColumnLocation>& resolved) {
  std::vector<Column> cols;
  if (resolved) cols.emplace_back(resolved->table_index, resolved->column_index);
  switch (level) {
    case MatchLevel::Column:
      break;
    case MatchLevel::Table:
      if (resolved) {
        add_text_columns(schema, resolved->table_index, cols);
      } else {
        std::vector<std::size_t> seen;
        for (const auto& ft : from_tables(schema, query)) seen.push_back(ft.table_index);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto t : seen) add_text_columns(schema, t, cols);
      }
      break;
    case MatchLevel::Database:
      for (std::size_t t = 0; t < schema.tables().size(); ++t) add_text_columns(schema, t, cols);
      break;
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  return cols;
}

}  // namespace

std::vector<CandidateValue> candidate_values(MatchLevel level, ValueScanner& scanner,
                                             const sql::ParsedQuery& query, const Predicate& predicate) {
  const auto& schema = scanner.schema();
  const auto resolved = resolve_predicate_column(schema, query, predicate);
  std::vector<CandidateValue> out;
  for (const auto& [t, c] : level_columns(level, schema, query, resolved)) {
    const auto& table = schema.tables()[t];
    for (const auto& v : scanner.values(t, c)) out.push_back({t, c, table.name, table.columns[c].name, v});
  }
  return out;
}

std::optional<MatchResult> best_match(std::span<const CandidateValue> candidates, std::string_view value,
                                      const SimilarityBackend& backend, MatchLevel level) {
  if (candidates.empty()) return std::nullopt;
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (const auto& c : candidates) texts.push_back(c.value);
  const auto scores = backend.score_batch(value, texts);
  if (scores.size() != candidates.size()) throw ProtocolError("backend returned the wrong number of scores");

  std::size_t best = 0;
  auto better = [&](std::size_t i, std::size_t j) {
    if (scores[i] != scores[j]) return scores[i] > scores[j];
    const auto& a = candidates[i];
    const auto& b = candidates[j];
    if (a.table_index != b.table_index) return a.table_index < b.table_index;
    if (a.column_index != b.column_index) return a.column_index < b.column_index;
    return a.value < b.value;
  };
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (better(i, best)) best = i;
  const auto& c = candidates[best];
  double s = scores[best];
  if (!std::isfinite(s)) s = 0.0;
  return MatchResult{c.table_index, c.column_index, c.table, c.column, c.value, std::clamp(s, 0.0, 1.0), level, false};
}

namespace {

bool is_wildcard(char c) { return c == '%' || c == '_'; }

std::pair<std::size_t, std::size_t> wildcard_bounds(const Predicate& p) {
  if (p.op != PredicateOp::Like) return {0, p.value.size()};
  std::size_t b = 0, e = p.value.size();
  while (b < e && is_wildcard(p.value[b])) ++b;
  while (e > b && is_wildcard(p.value[e - 1])) --e;
  return {b, e};
}

CalibrationFeedback run_levels(Connection& db, const DatabaseSchema& schema, const sql::ParsedQuery& query,
                               double threshold, const SimilarityBackend& backend,
                               std::span<const MatchLevel> levels, const CalibrationOptions& options) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw InvalidArgumentError("similarity threshold must lie in (0, 1]");
  ValueScanner scanner(db, schema, options.scan_cap);
  CalibrationFeedback feedback;
  for (const auto& predicate : extract_predicates(query)) {
    const auto target = match_text(predicate);
    if (text::trim(target).empty()) continue;
    std::optional<MatchResult> overall;
    std::optional<MatchResult> accepted;
    for (auto level : levels) {
      const auto candidates = candidate_values(level, scanner, query, predicate);
      auto m = best_match(candidates, target, backend, level);
      if (!m) continue;
      if (!overall || m->score > overall->score) overall = m;
      if (m->score >= threshold) {
        accepted = m;
        break;
      }
    }
    if (!overall) continue;
    MatchResult result = accepted ? *accepted : *overall;
    result.below_threshold = !accepted;
    feedback.replacements.push_back({predicate, resolve_predicate_column(schema, query, predicate), result});
  }
  return feedback;
}

}  // namespace

std::string match_text(const Predicate& predicate) {
  auto [b, e] = wildcard_bounds(predicate);
  return predicate.value.substr(b, e - b);
}

CalibrationFeedback multi_level_match(Connection& db, const DatabaseSchema& schema, const sql::ParsedQuery& query,
                                      double threshold, const SimilarityBackend& backend,
                                      const CalibrationOptions& options) {
  static constexpr MatchLevel all[] = {MatchLevel::Column, MatchLevel::Table, MatchLevel::Database};
  return run_levels(db, schema, query, threshold, backend, all, options);
}

CalibrationFeedback single_level_match(Connection& db, const DatabaseSchema& schema, const sql::ParsedQuery& query,
                                       double threshold, const SimilarityBackend& backend, MatchLevel level,
                                       const CalibrationOptions& options) {
  const MatchLevel one[] = {level};
  return run_levels(db, schema, query, threshold, backend, one, options);
}

Predicate replacement_predicate(const DatabaseSchema& schema, const sql::ParsedQuery& query,
                                const Replacement& r) {
  Predicate out = r.original;
  auto [b, e] = wildcard_bounds(r.original);
  out.value = r.original.value.substr(0, b) + r.match.value + r.original.value.substr(e);

  const bool same_column = r.original_location && r.original_location->table_index == r.match.table_index &&
                           r.original_location->column_index == r.match.column_index;
  if (same_column) return out;

  const auto column = sql::render_identifier(r.match.column);
  std::string qualifier;
  if (!r.original.qualifier().empty()) {
    // Reuse the alias the query already has for the new table, if any.
    qualifier = sql::render_identifier(r.match.table);
    for (const auto& ft : from_tables(schema, query)) {
      if (ft.table_index == r.match.table_index) {
        qualifier = sql::render_identifier(ft.alias);
        break;
      }
    }
  }
  out.column = qualifier.empty() ? column : qualifier + "." + column;
  return out;
}

sql::ParsedQuery apply_replacements(const DatabaseSchema& schema, const sql::ParsedQuery& query,
                                    const CalibrationFeedback& feedback) {
  sql::ParsedQuery current = query;
  for (const auto& r : feedback.replacements) {
    if (r.match.below_threshold) continue;
    current = rewrite_predicate(current, r.original, replacement_predicate(schema, query, r));
  }
  return current;
}

nlohmann::ordered_json to_json(const MatchResult& m) {
  return {{"table", m.table},   {"column", m.column},
          {"value", m.value},   {"score", m.score},
          {"level", std::string(to_string(m.level))}, {"below_threshold", m.below_threshold}};
}

nlohmann::ordered_json to_json(const CalibrationFeedback& feedback) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : feedback.replacements) {
    arr.push_back({{"predicate",
                    {{"column", r.original.column},
                     {"op", std::string(to_string(r.original.op))},
                     {"value", r.original.value}}},
                   {"match", to_json(r.match)}});
  }
  return arr;
}

}  // namespace sqlsketch
