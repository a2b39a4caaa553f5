#include "sqlsketch/predicates.hpp"

#include <algorithm>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

std::string_view to_string(PredicateOp op) {
  switch (op) {
    case PredicateOp::Equals:
      return "=";
    case PredicateOp::Like:
      return "LIKE";
    case PredicateOp::InElement:
      break;
  }
  return "IN";
}

std::string Predicate::qualifier() const {
  auto dot = column.rfind('.');
  return dot == std::string::npos ? std::string() : column.substr(0, dot);
}

std::string Predicate::bare_column() const {
  auto dot = column.rfind('.');
  return dot == std::string::npos ? column : column.substr(dot + 1);
}

bool operator==(const Predicate& a, const Predicate& b) {
  return a.op == b.op && a.value == b.value && text::iequals(a.column, b.column);
}

namespace {

const sql::ColumnRef* as_column(const sql::ExprRef& e) {
  return e ? std::get_if<sql::ColumnRef>(&e->node) : nullptr;
}

const sql::Literal* as_string(const sql::ExprRef& e) {
  if (!e) return nullptr;
  const auto* lit = std::get_if<sql::Literal>(&e->node);
  return lit && lit->kind == sql::Literal::Kind::String ? lit : nullptr;
}

std::string column_text(const sql::ColumnRef& c) {
  return c.qualifier.empty() ? c.name : c.qualifier + "." + c.name;
}

void collect(const sql::Expr& root, int depth, std::vector<Predicate>& out) {
  sql::for_each_expr(root, [&](const sql::Expr& e) {
    auto push = [&](const sql::ExprRef& col_expr, const sql::ExprRef& lit_expr, PredicateOp op) {
      const auto* col = as_column(col_expr);
      const auto* lit = as_string(lit_expr);
      if (!col || !lit) return false;
      Predicate p;
      p.column = column_text(*col);
      p.op = op;
      p.value = lit->value;
      p.depth = depth;
      p.quote = lit->quote;
      p.column_span = col_expr->span;
      p.value_span = lit_expr->span;
      out.push_back(std::move(p));
      return true;
    };
    if (const auto* b = std::get_if<sql::Binary>(&e.node)) {
      PredicateOp op;
      if (b->op == "=") {
        op = PredicateOp::Equals;
      } else if (b->op == "LIKE" || b->op == "NOT LIKE") {
        op = PredicateOp::Like;
      } else {
        return;
      }
      if (!push(b->lhs, b->rhs, op) && op == PredicateOp::Equals) push(b->rhs, b->lhs, op);
    } else if (const auto* in = std::get_if<sql::InList>(&e.node)) {
      for (const auto& item : in->items) push(in->operand, item, PredicateOp::InElement);
    }
  });
}

}  // namespace

std::vector<Predicate> extract_predicates(const sql::ParsedQuery& query) {
  std::vector<Predicate> out;
  sql::for_each_core(query.tree(), [&](const sql::SelectCore& core, int depth) {
    if (core.where) collect(*core.where, depth, out);
    if (core.having) collect(*core.having, depth, out);
  });
  std::stable_sort(out.begin(), out.end(), [](const Predicate& a, const Predicate& b) {
    return a.value_span.begin < b.value_span.begin;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].ordinal = i;
  return out;
}

sql::ParsedQuery rewrite_predicate(const sql::ParsedQuery& query, const Predicate& old,
                                   const Predicate& replacement) {
  const auto found = extract_predicates(query);
  const Predicate* target = nullptr;
  if (old.ordinal < found.size() && found[old.ordinal] == old) {
    target = &found[old.ordinal];
  } else {
    auto it = std::find(found.begin(), found.end(), old);
    if (it != found.end()) target = &*it;
  }
  if (!target) {
    throw PredicateNotFoundError("predicate " + old.column + " " + std::string(to_string(old.op)) +
                                 " '" + old.value + "' does not occur in the query");
  }

  std::string text = query.original_text();
  // Splice the later span first so the earlier offsets stay valid.
  struct Edit {
    sql::SourceSpan span;
    std::string with;
  };
  std::vector<Edit> edits;
  edits.push_back({target->value_span, sql::render_string_literal(replacement.value, target->quote)});
  if (!text::iequals(replacement.column, target->column)) edits.push_back({target->column_span, replacement.column});
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.span.begin > b.span.begin; });
  for (const auto& e : edits) text.replace(e.span.begin, e.span.end - e.span.begin, e.with);
  return sql::parse_sql(text);
}

}  // namespace sqlsketch
