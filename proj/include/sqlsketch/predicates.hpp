#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sqlsketch/sql_parser.hpp"

namespace sqlsketch {

enum class PredicateOp { Equals, Like, InElement };

std::string_view to_string(PredicateOp op);

/// A comparison of a column against a string literal, found in a WHERE or
/// HAVING clause at any nesting depth.
struct Predicate {
  std::string column;  // as written, e.g. "given_name" or "T1.given_name"
  PredicateOp op = PredicateOp::Equals;
  std::string value;  // unescaped literal content

  // Location in the query the predicate came from.
  std::size_t ordinal = 0;  // position in extraction order
  int depth = 0;            // 0 = outermost query
  char quote = '\'';
  sql::SourceSpan column_span;
  sql::SourceSpan value_span;

  std::string qualifier() const;
  std::string bare_column() const;

  /// Column compared case-insensitively; location fields are ignored.
  friend bool operator==(const Predicate& a, const Predicate& b);
};

/// Left-to-right by position in the query text. Numeric comparisons are not
/// predicates; negated comparisons (NOT LIKE, NOT IN, NOT (...)) are.
std::vector<Predicate> extract_predicates(const sql::ParsedQuery& query);

/// Replaces the column and value of one occurrence of `old` (the occurrence
/// at old.ordinal when it matches, otherwise the first match), leaving every
/// other byte of the query text untouched. The column text is only replaced
/// when it differs case-insensitively.
sql::ParsedQuery rewrite_predicate(const sql::ParsedQuery& query, const Predicate& old,
                                   const Predicate& replacement);

}  // namespace sqlsketch
