#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sqlsketch/sql_ast.hpp"

namespace sqlsketch::sql {

enum class TokenKind {
  Identifier,        // bare word, including keywords
  QuotedIdentifier,  // `name` or [name]
  String,            // 'text'
  DoubleQuoted,      // "text": a string literal in the benchmark dialect
  Number,
  Symbol,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // unescaped content for quoted kinds, verbatim otherwise
  std::size_t begin = 0;
  std::size_t end = 0;

  /// Case-insensitive keyword test; only bare identifiers qualify.
  bool is_keyword(std::string_view upper) const;
  bool is_symbol(std::string_view sym) const { return kind == TokenKind::Symbol && text == sym; }
};

/// Throws SqlParseError on unterminated literals or stray characters.
std::vector<Token> tokenize(std::string_view sql);

/// A parse tree together with the text it came from.
class ParsedQuery {
 public:
  ParsedQuery(std::shared_ptr<const Query> tree, std::string original_text)
      : tree_(std::move(tree)), original_text_(std::move(original_text)) {}

  const Query& tree() const noexcept { return *tree_; }
  const std::string& original_text() const noexcept { return original_text_; }

 private:
  std::shared_ptr<const Query> tree_;
  std::string original_text_;
};

/// SELECT statements only (with set operations, subqueries, joins).
/// Anything else, including DML and DDL, raises SqlParseError.
ParsedQuery parse_sql(std::string_view sql);

/// Optional overrides used when rendering a sketch in index form.
struct RenderHooks {
  std::function<std::string(const ColumnRef&)> column;
  std::function<std::string(const Star&)> star;
};

/// Canonical text: upper-case keywords, single spaces, original grouping
/// kept through Paren nodes. parse(render(q)) == q.
std::string render(const Query& query, const RenderHooks* hooks = nullptr);
std::string render(const Expr& expr, const RenderHooks* hooks = nullptr);

/// `SELECT [DISTINCT] item, item, ...` of one core.
std::string render_select_clause(const SelectCore& core, const RenderHooks* hooks = nullptr);

/// Quotes an identifier with backticks when it is not a plain word.
std::string render_identifier(std::string_view name);
std::string render_string_literal(std::string_view value, char quote = '\'');

bool is_reserved_word(std::string_view word);

}  // namespace sqlsketch::sql
