#include "sqlsketch/sql_ast.hpp"

namespace sqlsketch::sql {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void children(const Expr& e, const std::function<void(const Expr&)>& fn) {
  auto visit_ref = [&](const ExprRef& r) {
    if (r) fn(*r);
  };
  std::visit(Overloaded{
                 [](const ColumnRef&) {},
                 [](const Literal&) {},
                 [](const Star&) {},
                 [](const Exists&) {},
                 [](const ScalarQuery&) {},
                 [&](const Unary& u) { visit_ref(u.operand); },
                 [&](const Binary& b) {
                   visit_ref(b.lhs);
                   visit_ref(b.rhs);
                 },
                 [&](const Between& b) {
                   visit_ref(b.operand);
                   visit_ref(b.low);
                   visit_ref(b.high);
                 },
                 [&](const InList& in) {
                   visit_ref(in.operand);
                   for (const auto& item : in.items) visit_ref(item);
                 },
                 [&](const InQuery& in) { visit_ref(in.operand); },
                 [&](const FunctionCall& f) {
                   for (const auto& a : f.args) visit_ref(a);
                 },
                 [&](const Case& c) {
                   visit_ref(c.operand);
                   for (const auto& [w, t] : c.branches) {
                     visit_ref(w);
                     visit_ref(t);
                   }
                   visit_ref(c.otherwise);
                 },
                 [&](const Cast& c) { visit_ref(c.operand); },
                 [&](const Paren& p) { visit_ref(p.inner); },
             },
             e.node);
}

void core_exprs(const SelectCore& core, const std::function<void(const Expr&)>& fn) {
  for (const auto& item : core.items) fn(*item.expr);
  if (core.from) {
    for (const auto& j : core.from->joins)
      if (j.on) fn(*j.on);
  }
  if (core.where) fn(*core.where);
  for (const auto& g : core.group_by) fn(*g);
  if (core.having) fn(*core.having);
}

void walk_core(const SelectCore& core, int depth,
               const std::function<void(const SelectCore&, int)>& fn);

void walk_query(const Query& q, int depth, const std::function<void(const SelectCore&, int)>& fn) {
  walk_core(q.core, depth, fn);
  for (const auto& op : q.compounds) walk_core(op.core, depth, fn);
  auto nested = [&](const Expr& e) {
    for_each_expr(e, [&](const Expr& sub) {
      for_each_subquery(sub, [&](const Query& inner) { walk_query(inner, depth + 1, fn); });
    });
  };
  for (const auto& term : q.order_by) nested(*term.expr);
  if (q.limit) nested(*q.limit);
  if (q.offset) nested(*q.offset);
}

void walk_core(const SelectCore& core, int depth,
               const std::function<void(const SelectCore&, int)>& fn) {
  fn(core, depth);
  for (const TableRef* t : tables_of(core))
    if (t->subquery) walk_query(*t->subquery, depth + 1, fn);
  core_exprs(core, [&](const Expr& root) {
    for_each_expr(root, [&](const Expr& e) {
      for_each_subquery(e, [&](const Query& inner) { walk_query(inner, depth + 1, fn); });
    });
  });
}

}  // namespace

std::vector<const TableRef*> tables_of(const SelectCore& core) {
  std::vector<const TableRef*> out;
  if (!core.from) return out;
  out.push_back(&core.from->first);
  for (const auto& j : core.from->joins) out.push_back(&j.table);
  return out;
}

void for_each_subquery(const Expr& expr, const std::function<void(const Query&)>& fn) {
  std::visit(Overloaded{
                 [&](const InQuery& in) { fn(*in.query); },
                 [&](const Exists& e) { fn(*e.query); },
                 [&](const ScalarQuery& s) { fn(*s.query); },
                 [](const auto&) {},
             },
             expr.node);
}

void for_each_expr(const Expr& expr, const std::function<void(const Expr&)>& fn) {
  fn(expr);
  children(expr, [&](const Expr& child) { for_each_expr(child, fn); });
}

void for_each_core(const Query& query, const std::function<void(const SelectCore&, int depth)>& fn) {
  walk_query(query, 0, fn);
}

}  // namespace sqlsketch::sql
