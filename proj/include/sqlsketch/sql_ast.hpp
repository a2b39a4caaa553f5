#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sqlsketch::sql {

/// Byte range [begin, end) in the original query text. Spans never take part
/// in structural equality, so re-parsing a reformatted query compares equal.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const SourceSpan&, const SourceSpan&) { return true; }
};

/// Shared, immutable, nullable child pointer with deep equality.
template <class T>
class Ref {
 public:
  Ref() = default;
  Ref(T value) : ptr_(std::make_shared<const T>(std::move(value))) {}  // NOLINT

  explicit operator bool() const noexcept { return ptr_ != nullptr; }
  const T& operator*() const noexcept { return *ptr_; }
  const T* operator->() const noexcept { return ptr_.get(); }
  const T* get() const noexcept { return ptr_.get(); }

  friend bool operator==(const Ref& a, const Ref& b) {
    if (a.ptr_ == b.ptr_) return true;
    if (!a.ptr_ || !b.ptr_) return false;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::shared_ptr<const T> ptr_;
};

struct Expr;
struct Query;
using ExprRef = Ref<Expr>;
using QueryRef = Ref<Query>;

struct ColumnRef {
  std::string qualifier;  // table name or alias; empty when bare
  std::string name;
  bool operator==(const ColumnRef&) const = default;
};

struct Literal {
  enum class Kind { String, Number, Null };
  Kind kind = Kind::Null;
  std::string value;  // unescaped for strings, verbatim for numbers
  char quote = '\'';  // `'` or `"` for strings
  bool operator==(const Literal&) const = default;
};

struct Star {
  std::string qualifier;
  bool operator==(const Star&) const = default;
};

struct Unary {
  std::string op;  // NOT, -, +, ~
  ExprRef operand;
  bool operator==(const Unary&) const = default;
};

struct Binary {
  std::string op;  // upper-case canonical: =, !=, <, AND, LIKE, NOT LIKE, IS NOT, ...
  ExprRef lhs;
  ExprRef rhs;
  bool operator==(const Binary&) const = default;
};

struct Between {
  ExprRef operand;
  ExprRef low;
  ExprRef high;
  bool negated = false;
  bool operator==(const Between&) const = default;
};

struct InList {
  ExprRef operand;
  std::vector<ExprRef> items;
  bool negated = false;
  bool operator==(const InList&) const = default;
};

struct InQuery {
  ExprRef operand;
  QueryRef query;
  bool negated = false;
  bool operator==(const InQuery&) const = default;
};

struct Exists {
  QueryRef query;
  bool operator==(const Exists&) const = default;
};

struct FunctionCall {
  std::string name;  // as written
  bool distinct = false;
  bool star = false;  // COUNT(*)
  std::vector<ExprRef> args;
  bool operator==(const FunctionCall&) const = default;
};

struct ScalarQuery {
  QueryRef query;
  bool operator==(const ScalarQuery&) const = default;
};

struct Case {
  ExprRef operand;
  std::vector<std::pair<ExprRef, ExprRef>> branches;
  ExprRef otherwise;
  bool operator==(const Case&) const = default;
};

struct Cast {
  ExprRef operand;
  std::string type_name;
  bool operator==(const Cast&) const = default;
};

struct Paren {
  ExprRef inner;
  bool operator==(const Paren&) const = default;
};

struct Expr {
  using Node = std::variant<ColumnRef, Literal, Star, Unary, Binary, Between, InList, InQuery,
                            Exists, FunctionCall, ScalarQuery, Case, Cast, Paren>;
  Node node;
  SourceSpan span;
  bool operator==(const Expr&) const = default;
};

struct SelectItem {
  ExprRef expr;
  std::string alias;
  bool operator==(const SelectItem&) const = default;
};

struct TableRef {
  std::string name;  // empty for a derived table
  std::string alias;
  QueryRef subquery;
  SourceSpan span;
  bool operator==(const TableRef&) const = default;
};

struct Join {
  std::string op;  // "," or e.g. "JOIN", "LEFT JOIN", "NATURAL JOIN"
  TableRef table;
  ExprRef on;
  std::vector<std::string> using_columns;
  bool operator==(const Join&) const = default;
};

struct FromClause {
  TableRef first;
  std::vector<Join> joins;
  bool operator==(const FromClause&) const = default;
};

struct SelectCore {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::optional<FromClause> from;
  ExprRef where;
  std::vector<ExprRef> group_by;
  ExprRef having;
  bool operator==(const SelectCore&) const = default;
};

struct SetOperation {
  std::string op;  // UNION, UNION ALL, INTERSECT, EXCEPT
  SelectCore core;
  bool operator==(const SetOperation&) const = default;
};

struct OrderTerm {
  ExprRef expr;
  std::string direction;  // "", ASC, DESC
  bool operator==(const OrderTerm&) const = default;
};

struct Query {
  SelectCore core;
  std::vector<SetOperation> compounds;
  std::vector<OrderTerm> order_by;
  ExprRef limit;
  ExprRef offset;
  bool operator==(const Query&) const = default;
};

/// Tables referenced by one SELECT core, in FROM order.
std::vector<const TableRef*> tables_of(const SelectCore& core);

/// Subqueries directly nested in an expression (not recursing into them).
void for_each_subquery(const Expr& expr, const std::function<void(const Query&)>& fn);

/// Pre-order walk over an expression; does not enter subqueries.
void for_each_expr(const Expr& expr, const std::function<void(const Expr&)>& fn);

/// Every SELECT core at every nesting depth (0 = outermost), in source order
/// of discovery: each core, then the subqueries reachable from it.
void for_each_core(const Query& query, const std::function<void(const SelectCore&, int depth)>& fn);

}  // namespace sqlsketch::sql
