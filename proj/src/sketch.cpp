#include "sqlsketch/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/sql_parser.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

std::string_view to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::Select:
      return "Select";
    case SketchKind::From:
      return "From";
    case SketchKind::Keywords:
      break;
  }
  return "Keywords";
}

const std::vector<std::string>& keyword_vocabulary() {
  static const std::vector<std::string> kVocabulary = {
      "SELECT", "FROM",  "JOIN",      "WHERE",  "GROUP BY", "HAVING", "ORDER BY", "LIMIT", "DISTINCT",
      "UNION",  "INTERSECT", "EXCEPT", "IN",    "NOT IN",   "LIKE",   "BETWEEN",  "EXISTS",
  };
  return kVocabulary;
}

std::optional<std::vector<std::string>> parse_keywords(std::string_view text) {
  auto words = text::split_whitespace(text::to_upper(text));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words.size();) {
    if (i + 1 < words.size()) {
      std::string two = words[i] + " " + words[i + 1];
      if (two == "GROUP BY" || two == "ORDER BY" || two == "NOT IN") {
        out.push_back(std::move(two));
        i += 2;
        continue;
      }
    }
    const auto& vocab = keyword_vocabulary();
    if (std::find(vocab.begin(), vocab.end(), words[i]) == vocab.end())
      return std::nullopt;
    out.push_back(words[i]);
    ++i;
  }
  return out;
}

SketchPart::SketchPart(SketchKind kind, std::string content) : kind_(kind), content_(std::move(content)) {
  if (text::trim(content_).empty())
    throw InvalidArgumentError("empty " + std::string(to_string(kind_)) + " sketch part");
  if (kind_ == SketchKind::Keywords) {
    auto words = parse_keywords(content_);
    if (!words || words->empty())
      throw InvalidArgumentError("keyword part contains non-canonical keywords: '" + content_ + "'");
  }
}

std::string_view instruction_for(SketchKind kind) {
  switch (kind) {
    case SketchKind::Select:
      return "Generate the select clause of this question according to the database.";
    case SketchKind::From:
      return "Generate the relevant tables of this question according to the database.";
    case SketchKind::Keywords:
      break;
  }
  return "Generate the SQL keywords of this question according to the database.";
}

std::string build_task_input(std::string_view instruction, std::string_view question,
                             const DatabaseSchema& schema) {
  if (text::trim(instruction).empty()) throw InvalidArgumentError("empty instruction");
  if (text::trim(question).empty()) throw InvalidArgumentError("empty question");
  std::string out(instruction);
  out += " question: ";
  out += question;
  out += " database: ";
  out += serialize_schema(schema);
  return out;
}

std::vector<CandidatePair> combine_candidates(std::span<const SketchPart> selects,
                                              std::span<const SketchPart> keywords) {
  if (selects.empty() || keywords.empty())
    throw EmptyCandidateError("cannot combine an empty candidate list");
  std::vector<CandidatePair> out;
  out.reserve(selects.size() * keywords.size());
  for (std::size_t s = 0; s < selects.size(); ++s) {
    for (std::size_t k = 0; k < keywords.size(); ++k) {
      bool seen = std::any_of(out.begin(), out.end(), [&](const CandidatePair& p) {
        return p.select_part == selects[s] && p.keywords_part == keywords[k];
      });
      if (!seen) out.push_back(CandidatePair{selects[s], keywords[k], s, k});
    }
  }
  return out;
}

std::string build_aligner_input(std::string_view question, const CandidatePair& pair) {
  if (text::trim(question).empty()) throw InvalidArgumentError("empty question");
  std::string out = "[CLS] user question: ";
  out += question;
  out += ". our solution: ";
  out += pair.select_part.content();
  out += ", ";
  out += pair.keywords_part.content();
  out += " [SEP]";
  return out;
}

AlignedPair rank_pairs(std::span<const CandidatePair> pairs, std::span<const double> scores) {
  if (pairs.size() != scores.size()) {
    throw ScoreArityError("got " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(pairs.size()) + " pairs");
  }
  if (pairs.empty()) throw EmptyCandidateError("no candidate pairs to rank");
  std::size_t best = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidArgumentError("non-finite alignment score");
    // strict > keeps the earliest pair on ties; pairs arrive in rank order
    if (scores[i] > scores[best]) best = i;
  }
  const auto& p = pairs[best];
  return AlignedPair{p.select_part, p.keywords_part, scores[best], p.select_rank, p.keyword_rank};
}

std::vector<SqlSketch> assemble_sketches(const AlignedPair& best,
                                         std::span<const SketchPart> from_candidates) {
  if (from_candidates.empty()) throw EmptyCandidateError("no FROM candidates");
  std::vector<SqlSketch> out;
  out.reserve(from_candidates.size());
  for (std::size_t i = 0; i < from_candidates.size(); ++i)
    out.push_back(SqlSketch{best.select_part, from_candidates[i], best.keywords_part, i});
  return out;
}

std::vector<std::string> extract_keywords(std::string_view sql_text) {
  const auto tokens = sql::tokenize(sql_text);
  std::vector<std::string> out;
  auto add = [&](std::string kw) {
    if (std::find(out.begin(), out.end(), kw) == out.end()) out.push_back(std::move(kw));
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.kind != sql::TokenKind::Identifier) continue;
    const std::string w = text::to_upper(t.text);
    const bool next_by = i + 1 < tokens.size() && tokens[i + 1].is_keyword("BY");
    if (w == "SELECT" || w == "FROM" || w == "JOIN" || w == "WHERE" || w == "HAVING" || w == "LIMIT" ||
        w == "DISTINCT" || w == "UNION" || w == "INTERSECT" || w == "EXCEPT" || w == "LIKE" ||
        w == "BETWEEN" || w == "EXISTS") {
      add(w);
    } else if ((w == "GROUP" || w == "ORDER") && next_by) {
      add(w + " BY");
    } else if (w == "IN") {
      const bool negated = i > 0 && tokens[i - 1].is_keyword("NOT");
      add(negated ? "NOT IN" : "IN");
    }
  }
  return out;
}

namespace {

struct ScopeEntry {
  std::string key;  // lower-case alias or table name
  std::optional<std::size_t> table_index;  // nullopt for derived tables
};

std::vector<ScopeEntry> scope_of(const sql::SelectCore& core, const DatabaseSchema& schema) {
  std::vector<ScopeEntry> scope;
  for (const sql::TableRef* t : sql::tables_of(core)) {
    std::optional<std::size_t> index;
    if (!t->subquery) {
      index = schema.find_table(t->name);
      if (!index) throw SchemaMismatchError("table '" + t->name + "' is not in schema '" + schema.db_name() + "'");
    }
    const std::string& key = t->alias.empty() ? t->name : t->alias;
    scope.push_back(ScopeEntry{text::to_lower(key), index});
    // a table stays reachable by its own name even when aliased
    if (!t->alias.empty() && !t->subquery) scope.push_back(ScopeEntry{text::to_lower(t->name), index});
  }
  return scope;
}

std::string index_token(std::size_t table, std::size_t column) {
  return "t" + std::to_string(table) + ".c" + std::to_string(column);
}

}  // namespace

SqlSketch extract_sketch_from_sql(std::string_view sql_text, const DatabaseSchema& schema) {
  const auto parsed = sql::parse_sql(sql_text);
  const sql::Query& q = parsed.tree();
  const auto scope = scope_of(q.core, schema);
  const bool has_derived = std::any_of(scope.begin(), scope.end(),
                                       [](const ScopeEntry& e) { return !e.table_index; });

  sql::RenderHooks hooks;
  hooks.column = [&](const sql::ColumnRef& c) -> std::string {
    if (!c.qualifier.empty()) {
      const std::string key = text::to_lower(c.qualifier);
      auto it = std::find_if(scope.begin(), scope.end(), [&](const ScopeEntry& e) { return e.key == key; });
      if (it == scope.end())
        throw SchemaMismatchError("unknown table or alias '" + c.qualifier + "'");
      if (!it->table_index) return c.qualifier + "." + c.name;
      auto col = schema.tables()[*it->table_index].find_column(c.name);
      if (!col)
        throw SchemaMismatchError("column '" + c.name + "' not in table '" +
                                  schema.tables()[*it->table_index].name + "'");
      return index_token(*it->table_index, *col);
    }
    for (const auto& e : scope) {
      if (!e.table_index) continue;
      if (auto col = schema.tables()[*e.table_index].find_column(c.name)) return index_token(*e.table_index, *col);
    }
    if (has_derived) return c.name;
    throw SchemaMismatchError("column '" + c.name + "' not found in the FROM tables");
  };
  hooks.star = [&](const sql::Star& s) -> std::string {
    if (s.qualifier.empty()) return "*";
    const std::string key = text::to_lower(s.qualifier);
    auto it = std::find_if(scope.begin(), scope.end(), [&](const ScopeEntry& e) { return e.key == key; });
    if (it == scope.end()) throw SchemaMismatchError("unknown table or alias '" + s.qualifier + "'");
    if (!it->table_index) return s.qualifier + ".*";
    return "t" + std::to_string(*it->table_index) + ".*";
  };
  std::string select_part = sql::render_select_clause(q.core, &hooks);

  std::vector<std::pair<std::size_t, std::size_t>> tables;  // (source offset, table index)
  sql::for_each_core(q, [&](const sql::SelectCore& core, int) {
    for (const sql::TableRef* t : sql::tables_of(core)) {
      if (t->subquery) continue;
      auto index = schema.find_table(t->name);
      if (!index) throw SchemaMismatchError("table '" + t->name + "' is not in schema '" + schema.db_name() + "'");
      tables.emplace_back(t->span.begin, *index);
    }
  });
  std::stable_sort(tables.begin(), tables.end());
  std::vector<std::string> from_tokens;
  for (const auto& [offset, index] : tables) {
    std::string tok = "t" + std::to_string(index);
    if (std::find(from_tokens.begin(), from_tokens.end(), tok) == from_tokens.end()) from_tokens.push_back(tok);
  }
  if (from_tokens.empty()) throw SchemaMismatchError("query references no schema table");

  return SqlSketch{SketchPart(SketchKind::Select, std::move(select_part)),
                   SketchPart(SketchKind::From, "FROM " + text::join(from_tokens, ", ")),
                   SketchPart(SketchKind::Keywords, text::join(extract_keywords(sql_text), " ")), 0};
}

NamedSketch translate_sketch(const DatabaseSchema& schema, const SqlSketch& sketch) {
  return NamedSketch{translate_indexed_text(schema, sketch.select_part.content()),
                     translate_indexed_text(schema, sketch.from_part.content()),
                     sketch.keywords_part.content()};
}

TrainingDerivation derive_training_records(std::span<const LabeledExample> examples) {
  TrainingDerivation out;
  out.records.reserve(examples.size() * 3);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    try {
      if (!ex.schema) throw InvalidArgumentError("example has no schema");
      const SqlSketch sketch = extract_sketch_from_sql(ex.gold_sql, *ex.schema);
      const std::string serialized = serialize_schema(*ex.schema);
      for (const auto* part : {&sketch.select_part, &sketch.from_part, &sketch.keywords_part}) {
        out.records.push_back(TrainingRecord{std::string(instruction_for(part->kind())), ex.question,
                                             serialized, part->content(), part->kind()});
      }
    } catch (const Error& e) {
      out.diagnostics.push_back("example " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

bool parts_match(std::string_view a, std::string_view b) {
  return text::normalize_spaces_lower(a) == text::normalize_spaces_lower(b);
}

std::vector<AlignerRecord> derive_aligner_records(std::string_view question,
                                                  std::span<const CandidatePair> pairs,
                                                  const SketchPart& gold_select,
                                                  const SketchPart& gold_keywords) {
  std::vector<AlignerRecord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const bool positive = parts_match(p.select_part.content(), gold_select.content()) &&
                          parts_match(p.keywords_part.content(), gold_keywords.content());
    out.push_back(AlignerRecord{std::string(question), p.select_part.content(), p.keywords_part.content(),
                                positive ? 1 : 0});
  }
  return out;
}

nlohmann::ordered_json to_json(const TrainingRecord& r) {
  return {{"instruction", r.instruction},
          {"question", r.question},
          {"serialized_schema", r.serialized_schema},
          {"label", r.label},
          {"subtask", std::string(to_string(r.subtask))}};
}

nlohmann::ordered_json to_json(const AlignerRecord& r) {
  return {{"question", r.question},
          {"select_part", r.select_part},
          {"keywords_part", r.keywords_part},
          {"label", r.label}};
}

nlohmann::ordered_json to_json(const SqlSketch& s) {
  return {{"rank", s.rank},
          {"select_part", s.select_part.content()},
          {"from_part", s.from_part.content()},
          {"keywords_part", s.keywords_part.content()}};
}

}  // namespace sqlsketch
