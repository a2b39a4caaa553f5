#include "sqlsketch/sql_parser.hpp"

#include <array>
#include <cctype>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch::sql {

namespace {

constexpr std::array kReserved = {
    "ALL",     "AND",    "AS",     "ASC",       "BETWEEN", "BY",       "CASE",   "CAST",
    "COLLATE", "CROSS",  "DESC",   "DISTINCT",  "ELSE",    "END",      "ESCAPE", "EXCEPT",
    "EXISTS",  "FROM",   "FULL",   "GLOB",      "GROUP",   "HAVING",   "IN",     "INNER",
    "INTERSECT", "IS",   "ISNULL", "JOIN",      "LEFT",    "LIKE",     "LIMIT",  "NATURAL",
    "NOT",     "NOTNULL", "NULL",  "OFFSET",    "ON",      "OR",       "ORDER",  "OUTER",
    "RIGHT",   "SELECT", "THEN",   "UNION",     "USING",   "WHEN",     "WHERE",
};

constexpr std::array kUnsupportedLeading = {
    "INSERT", "UPDATE", "DELETE", "REPLACE", "CREATE", "DROP", "ALTER", "ATTACH", "DETACH",
    "PRAGMA", "VACUUM", "BEGIN", "COMMIT", "ROLLBACK", "WITH", "EXPLAIN", "REINDEX", "ANALYZE",
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}
bool ident_char(char c) {
  return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$';
}

std::string read_quoted(std::string_view sql, std::size_t& i, char close) {
  const std::size_t start = i;
  ++i;
  std::string value;
  while (i < sql.size()) {
    if (sql[i] == close) {
      if (close != ']' && i + 1 < sql.size() && sql[i + 1] == close) {
        value += close;
        i += 2;
        continue;
      }
      ++i;
      return value;
    }
    value += sql[i++];
  }
  throw SqlParseError("unterminated quoted token", start);
}

}  // namespace

bool is_reserved_word(std::string_view word) {
  const std::string upper = text::to_upper(word);
  for (const char* kw : kReserved)
    if (upper == kw) return true;
  return false;
}

bool Token::is_keyword(std::string_view upper) const {
  return kind == TokenKind::Identifier && text::iequals(text, upper);
}

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < sql.size()) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      while (i < sql.size() && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') {
      auto close = sql.find("*/", i + 2);
      if (close == std::string_view::npos) throw SqlParseError("unterminated comment", i);
      i = close + 2;
      continue;
    }
    Token tok;
    tok.begin = i;
    if (ident_start(c)) {
      while (i < sql.size() && ident_char(sql[i])) ++i;
      tok.kind = TokenKind::Identifier;
      tok.text = std::string(sql.substr(tok.begin, i - tok.begin));
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      if (c == '0' && i + 1 < sql.size() && (sql[i + 1] == 'x' || sql[i + 1] == 'X')) {
        i += 2;
        while (i < sql.size() && std::isxdigit(static_cast<unsigned char>(sql[i]))) ++i;
      } else {
        while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        if (i < sql.size() && sql[i] == '.') {
          ++i;
          while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        }
        if (i < sql.size() && (sql[i] == 'e' || sql[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < sql.size() && (sql[j] == '+' || sql[j] == '-')) ++j;
          if (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) {
            i = j;
            while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
          }
        }
      }
      if (i < sql.size() && ident_start(sql[i])) throw SqlParseError("malformed number", tok.begin);
      tok.kind = TokenKind::Number;
      tok.text = std::string(sql.substr(tok.begin, i - tok.begin));
    } else if (c == '\'') {
      tok.kind = TokenKind::String;
      tok.text = read_quoted(sql, i, '\'');
    } else if (c == '"') {
      tok.kind = TokenKind::DoubleQuoted;
      tok.text = read_quoted(sql, i, '"');
    } else if (c == '`') {
      tok.kind = TokenKind::QuotedIdentifier;
      tok.text = read_quoted(sql, i, '`');
    } else if (c == '[') {
      tok.kind = TokenKind::QuotedIdentifier;
      tok.text = read_quoted(sql, i, ']');
    } else {
      static constexpr std::array<std::string_view, 9> kTwo = {"||", "<=", ">=", "<>", "!=", "==", "<<", ">>", "->"};
      tok.kind = TokenKind::Symbol;
      bool matched = false;
      for (auto op : kTwo) {
        if (sql.substr(i, 2) == op && op != "->") {
          tok.text = std::string(op);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        static constexpr std::string_view kSingle = "=<>+-*/%(),.;&|~";
        if (kSingle.find(c) == std::string_view::npos)
          throw SqlParseError(std::string("unexpected character '") + c + "'", i);
        tok.text = std::string(1, c);
        ++i;
      }
    }
    tok.end = i;
    tokens.push_back(std::move(tok));
  }
  Token end;
  end.kind = TokenKind::End;
  end.begin = end.end = sql.size();
  tokens.push_back(end);
  return tokens;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view sql) : sql_(sql), tokens_(tokenize(sql)) {}

  Query parse_statement() {
    const Token& first = peek();
    for (const char* kw : kUnsupportedLeading) {
      if (first.is_keyword(kw))
        throw SqlParseError("only SELECT statements are supported, found " + text::to_upper(first.text),
                            first.begin);
    }
    Query q = parse_query();
    while (peek().is_symbol(";")) advance();
    if (peek().kind != TokenKind::End) fail("unexpected token '" + peek().text + "'");
    return q;
  }

 private:
  std::string_view sql_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  std::size_t last_end() const { return pos_ == 0 ? 0 : tokens_[pos_ - 1].end; }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    throw SqlParseError(t.kind == TokenKind::End ? message + " (end of input)" : message, t.begin);
  }

  bool accept_keyword(std::string_view kw) {
    if (peek().is_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_symbol(std::string_view sym) {
    if (peek().is_symbol(sym)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail("expected " + std::string(kw));
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail("expected '" + std::string(sym) + "'");
  }

  bool at_name() const {
    const Token& t = peek();
    return t.kind == TokenKind::QuotedIdentifier ||
           (t.kind == TokenKind::Identifier && !is_reserved_word(t.text));
  }
  std::string expect_name(const char* what) {
    if (!at_name()) fail(std::string("expected ") + what);
    return advance().text;
  }

  // Optional alias: `AS name` or a bare non-reserved word. A double-quoted
  // token after AS is also accepted as an alias.
  std::string parse_alias() {
    if (accept_keyword("AS")) {
      if (peek().kind == TokenKind::DoubleQuoted || peek().kind == TokenKind::String) return advance().text;
      return expect_name("alias");
    }
    if (at_name()) return advance().text;
    return {};
  }

  Query parse_query() {
    Query q;
    q.core = parse_core();
    while (true) {
      std::string op;
      if (accept_keyword("UNION")) {
        op = accept_keyword("ALL") ? "UNION ALL" : "UNION";
      } else if (accept_keyword("INTERSECT")) {
        op = "INTERSECT";
      } else if (accept_keyword("EXCEPT")) {
        op = "EXCEPT";
      } else {
        break;
      }
      q.compounds.push_back(SetOperation{op, parse_core()});
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        OrderTerm term;
        term.expr = parse_expr();
        if (accept_keyword("ASC")) term.direction = "ASC";
        else if (accept_keyword("DESC")) term.direction = "DESC";
        q.order_by.push_back(std::move(term));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      q.limit = parse_expr();
      if (accept_keyword("OFFSET")) {
        q.offset = parse_expr();
      } else if (accept_symbol(",")) {
        // LIMIT skip, count
        q.offset = q.limit;
        q.limit = parse_expr();
      }
    }
    return q;
  }

  SelectCore parse_core() {
    expect_keyword("SELECT");
    SelectCore core;
    if (accept_keyword("DISTINCT")) core.distinct = true;
    else accept_keyword("ALL");
    do {
      core.items.push_back(parse_select_item());
    } while (accept_symbol(","));
    if (accept_keyword("FROM")) core.from = parse_from();
    if (accept_keyword("WHERE")) core.where = parse_expr();
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        core.group_by.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    if (accept_keyword("HAVING")) core.having = parse_expr();
    return core;
  }

  SelectItem parse_select_item() {
    SelectItem item;
    const std::size_t begin = peek().begin;
    if (peek().is_symbol("*")) {
      advance();
      item.expr = Expr{Star{}, {begin, last_end()}};
      return item;
    }
    if ((peek().kind == TokenKind::Identifier || peek().kind == TokenKind::QuotedIdentifier) &&
        peek(1).is_symbol(".") && peek(2).is_symbol("*")) {
      std::string qual = advance().text;
      advance();
      advance();
      item.expr = Expr{Star{qual}, {begin, last_end()}};
      return item;
    }
    item.expr = parse_expr();
    item.alias = parse_alias();
    return item;
  }

  TableRef parse_table_ref() {
    TableRef ref;
    ref.span.begin = peek().begin;
    if (peek().is_symbol("(")) {
      advance();
      if (!peek().is_keyword("SELECT")) fail("expected subquery");
      ref.subquery = parse_query();
      expect_symbol(")");
    } else {
      ref.name = expect_name("table name");
      if (accept_symbol(".")) ref.name = expect_name("table name");  // schema-qualified
    }
    ref.span.end = last_end();
    ref.alias = parse_alias();
    return ref;
  }

  std::optional<std::string> parse_join_op() {
    if (accept_symbol(",")) return std::string(",");
    std::string op;
    if (accept_keyword("NATURAL")) op = "NATURAL ";
    if (accept_keyword("LEFT")) {
      op += "LEFT ";
      if (accept_keyword("OUTER")) op += "OUTER ";
    } else if (accept_keyword("RIGHT")) {
      op += "RIGHT ";
      if (accept_keyword("OUTER")) op += "OUTER ";
    } else if (accept_keyword("FULL")) {
      op += "FULL ";
      if (accept_keyword("OUTER")) op += "OUTER ";
    } else if (accept_keyword("INNER")) {
      op += "INNER ";
    } else if (accept_keyword("CROSS")) {
      op += "CROSS ";
    }
    if (accept_keyword("JOIN")) return op + "JOIN";
    if (!op.empty()) fail("expected JOIN");
    return std::nullopt;
  }

  FromClause parse_from() {
    FromClause from;
    from.first = parse_table_ref();
    while (auto op = parse_join_op()) {
      Join join;
      join.op = *op;
      join.table = parse_table_ref();
      if (accept_keyword("ON")) {
        join.on = parse_expr();
      } else if (accept_keyword("USING")) {
        expect_symbol("(");
        do {
          join.using_columns.push_back(expect_name("column"));
        } while (accept_symbol(","));
        expect_symbol(")");
      }
      from.joins.push_back(std::move(join));
    }
    return from;
  }

  // --- expressions, lowest to highest precedence ---

  Expr make(Expr::Node node, std::size_t begin) { return Expr{std::move(node), {begin, last_end()}}; }

  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_and();
    while (accept_keyword("OR")) lhs = make(Binary{"OR", lhs, parse_and()}, begin);
    return lhs;
  }

  Expr parse_and() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_not();
    while (accept_keyword("AND")) lhs = make(Binary{"AND", lhs, parse_not()}, begin);
    return lhs;
  }

  Expr parse_not() {
    const std::size_t begin = peek().begin;
    if (accept_keyword("NOT")) return make(Unary{"NOT", parse_not()}, begin);
    return parse_equality();
  }

  Expr parse_equality() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_comparison();
    while (true) {
      const Token& t = peek();
      if (t.is_symbol("=") || t.is_symbol("==") || t.is_symbol("!=") || t.is_symbol("<>")) {
        std::string op = advance().text;
        if (op == "==") op = "=";
        lhs = make(Binary{op, lhs, parse_comparison()}, begin);
      } else if (t.is_keyword("IS")) {
        advance();
        const bool negated = accept_keyword("NOT");
        lhs = make(Binary{negated ? "IS NOT" : "IS", lhs, parse_comparison()}, begin);
      } else if (t.is_keyword("ISNULL")) {
        advance();
        lhs = make(Binary{"IS", lhs, Expr{Literal{Literal::Kind::Null, "NULL"}, {}}}, begin);
      } else if (t.is_keyword("NOTNULL")) {
        advance();
        lhs = make(Binary{"IS NOT", lhs, Expr{Literal{Literal::Kind::Null, "NULL"}, {}}}, begin);
      } else {
        bool negated = false;
        if (t.is_keyword("NOT") && (peek(1).is_keyword("IN") || peek(1).is_keyword("LIKE") ||
                                    peek(1).is_keyword("GLOB") || peek(1).is_keyword("BETWEEN"))) {
          advance();
          negated = true;
        }
        const Token& op = peek();
        if (op.is_keyword("IN")) {
          advance();
          lhs = parse_in_rhs(std::move(lhs), negated, begin);
        } else if (op.is_keyword("LIKE") || op.is_keyword("GLOB")) {
          std::string name = text::to_upper(advance().text);
          Expr rhs = parse_comparison();
          if (accept_keyword("ESCAPE")) fail("ESCAPE clauses are not supported");
          lhs = make(Binary{negated ? "NOT " + name : name, lhs, rhs}, begin);
        } else if (op.is_keyword("BETWEEN")) {
          advance();
          Expr low = parse_comparison();
          expect_keyword("AND");
          Expr high = parse_comparison();
          lhs = make(Between{lhs, low, high, negated}, begin);
        } else {
          if (negated) fail("expected IN, LIKE, GLOB or BETWEEN after NOT");
          return lhs;
        }
      }
    }
  }

  Expr parse_in_rhs(Expr operand, bool negated, std::size_t begin) {
    expect_symbol("(");
    if (peek().is_keyword("SELECT")) {
      Query sub = parse_query();
      expect_symbol(")");
      return make(InQuery{operand, std::move(sub), negated}, begin);
    }
    InList list{operand, {}, negated};
    if (!peek().is_symbol(")")) {
      do {
        list.items.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    expect_symbol(")");
    return make(std::move(list), begin);
  }

  Expr parse_comparison() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_bitwise();
    while (peek().is_symbol("<") || peek().is_symbol("<=") || peek().is_symbol(">") ||
           peek().is_symbol(">=")) {
      std::string op = advance().text;
      lhs = make(Binary{op, lhs, parse_bitwise()}, begin);
    }
    return lhs;
  }

  Expr parse_bitwise() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_additive();
    while (peek().is_symbol("&") || peek().is_symbol("|") || peek().is_symbol("<<") ||
           peek().is_symbol(">>")) {
      std::string op = advance().text;
      lhs = make(Binary{op, lhs, parse_additive()}, begin);
    }
    return lhs;
  }

  Expr parse_additive() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_multiplicative();
    while (peek().is_symbol("+") || peek().is_symbol("-")) {
      std::string op = advance().text;
      lhs = make(Binary{op, lhs, parse_multiplicative()}, begin);
    }
    return lhs;
  }

  Expr parse_multiplicative() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_concat();
    while (peek().is_symbol("*") || peek().is_symbol("/") || peek().is_symbol("%")) {
      std::string op = advance().text;
      lhs = make(Binary{op, lhs, parse_concat()}, begin);
    }
    return lhs;
  }

  Expr parse_concat() {
    const std::size_t begin = peek().begin;
    Expr lhs = parse_unary();
    while (peek().is_symbol("||")) {
      advance();
      lhs = make(Binary{"||", lhs, parse_unary()}, begin);
    }
    return lhs;
  }

  Expr parse_unary() {
    const std::size_t begin = peek().begin;
    if (peek().is_symbol("-") || peek().is_symbol("+") || peek().is_symbol("~")) {
      std::string op = advance().text;
      return make(Unary{op, parse_unary()}, begin);
    }
    Expr e = parse_primary();
    if (accept_keyword("COLLATE")) fail("COLLATE is not supported");
    return e;
  }

  Expr parse_primary() {
    const std::size_t begin = peek().begin;
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Number:
        advance();
        return make(Literal{Literal::Kind::Number, t.text}, begin);
      case TokenKind::String:
        advance();
        return make(Literal{Literal::Kind::String, t.text, '\''}, begin);
      case TokenKind::DoubleQuoted:
        advance();
        return make(Literal{Literal::Kind::String, t.text, '"'}, begin);
      case TokenKind::End:
        fail("expected expression");
      case TokenKind::Symbol:
        if (t.is_symbol("(")) {
          advance();
          if (peek().is_keyword("SELECT")) {
            Query sub = parse_query();
            expect_symbol(")");
            return make(ScalarQuery{std::move(sub)}, begin);
          }
          Expr inner = parse_expr();
          expect_symbol(")");
          return make(Paren{inner}, begin);
        }
        fail("unexpected '" + t.text + "'");
      case TokenKind::Identifier:
      case TokenKind::QuotedIdentifier:
        break;
    }
    if (t.kind == TokenKind::Identifier) {
      if (t.is_keyword("NULL")) {
        advance();
        return make(Literal{Literal::Kind::Null, "NULL"}, begin);
      }
      if (t.is_keyword("EXISTS")) {
        advance();
        expect_symbol("(");
        Query sub = parse_query();
        expect_symbol(")");
        return make(Exists{std::move(sub)}, begin);
      }
      if (t.is_keyword("CASE")) return parse_case();
      if (t.is_keyword("CAST")) {
        advance();
        expect_symbol("(");
        Expr operand = parse_expr();
        expect_keyword("AS");
        std::string type_name = expect_name("type name");
        while (at_name()) type_name += " " + advance().text;
        if (accept_symbol("(")) {
          type_name += "(";
          while (!peek().is_symbol(")") && peek().kind != TokenKind::End) type_name += advance().text;
          expect_symbol(")");
          type_name += ")";
        }
        expect_symbol(")");
        return make(Cast{operand, type_name}, begin);
      }
      if (is_reserved_word(t.text)) fail("unexpected keyword " + text::to_upper(t.text));
    }
    std::string first = advance().text;
    if (peek().is_symbol("(") && t.kind == TokenKind::Identifier) {
      advance();
      FunctionCall call{first, false, false, {}};
      if (accept_symbol("*")) {
        call.star = true;
      } else if (!peek().is_symbol(")")) {
        if (accept_keyword("DISTINCT")) call.distinct = true;
        do {
          call.args.push_back(parse_expr());
        } while (accept_symbol(","));
      }
      expect_symbol(")");
      return make(std::move(call), begin);
    }
    if (peek().is_symbol(".")) {
      advance();
      if (peek().is_symbol("*")) fail("qualified * is only allowed in the select list");
      std::string name = expect_name("column name");
      return make(ColumnRef{first, name}, begin);
    }
    return make(ColumnRef{"", first}, begin);
  }

  Expr parse_case() {
    const std::size_t begin = peek().begin;
    expect_keyword("CASE");
    Case c;
    if (!peek().is_keyword("WHEN")) c.operand = parse_expr();
    while (accept_keyword("WHEN")) {
      Expr when = parse_expr();
      expect_keyword("THEN");
      Expr then = parse_expr();
      c.branches.emplace_back(when, then);
    }
    if (c.branches.empty()) fail("CASE without WHEN");
    if (accept_keyword("ELSE")) c.otherwise = parse_expr();
    expect_keyword("END");
    return make(std::move(c), begin);
  }
};

// --- rendering ---

bool plain_word(std::string_view name) {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return !is_reserved_word(name);
}

struct Renderer {
  const RenderHooks* hooks;
  std::string out;

  void expr(const Expr& e) {
    std::visit([this](const auto& node) { this->node(node); }, e.node);
  }

  void node(const ColumnRef& c) {
    if (hooks && hooks->column) {
      out += hooks->column(c);
      return;
    }
    if (!c.qualifier.empty()) out += render_identifier(c.qualifier) + ".";
    out += render_identifier(c.name);
  }
  void node(const Literal& l) {
    switch (l.kind) {
      case Literal::Kind::String:
        out += render_string_literal(l.value, l.quote);
        break;
      case Literal::Kind::Number:
        out += l.value;
        break;
      case Literal::Kind::Null:
        out += "NULL";
        break;
    }
  }
  void node(const Star& s) {
    if (hooks && hooks->star) {
      out += hooks->star(s);
      return;
    }
    if (!s.qualifier.empty()) out += render_identifier(s.qualifier) + ".";
    out += "*";
  }
  void node(const Unary& u) {
    if (u.op == "NOT") {
      out += "NOT ";
      expr(*u.operand);
      return;
    }
    out += u.op;
    const std::size_t mark = out.size();
    expr(*u.operand);
    // keep "- -1" from turning into a comment
    if (out.size() > mark && (out[mark] == '-' || out[mark] == '+')) out.insert(mark, " ");
  }
  void node(const Binary& b) {
    expr(*b.lhs);
    out += " " + b.op + " ";
    expr(*b.rhs);
  }
  void node(const Between& b) {
    expr(*b.operand);
    out += b.negated ? " NOT BETWEEN " : " BETWEEN ";
    expr(*b.low);
    out += " AND ";
    expr(*b.high);
  }
  void node(const InList& in) {
    expr(*in.operand);
    out += in.negated ? " NOT IN (" : " IN (";
    for (std::size_t i = 0; i < in.items.size(); ++i) {
      if (i) out += ", ";
      expr(*in.items[i]);
    }
    out += ")";
  }
  void node(const InQuery& in) {
    expr(*in.operand);
    out += in.negated ? " NOT IN (" : " IN (";
    query(*in.query);
    out += ")";
  }
  void node(const Exists& e) {
    out += "EXISTS (";
    query(*e.query);
    out += ")";
  }
  void node(const FunctionCall& f) {
    out += f.name + "(";
    if (f.star) {
      out += "*";
    } else {
      if (f.distinct) out += "DISTINCT ";
      for (std::size_t i = 0; i < f.args.size(); ++i) {
        if (i) out += ", ";
        expr(*f.args[i]);
      }
    }
    out += ")";
  }
  void node(const ScalarQuery& s) {
    out += "(";
    query(*s.query);
    out += ")";
  }
  void node(const Case& c) {
    out += "CASE";
    if (c.operand) {
      out += " ";
      expr(*c.operand);
    }
    for (const auto& [when, then] : c.branches) {
      out += " WHEN ";
      expr(*when);
      out += " THEN ";
      expr(*then);
    }
    if (c.otherwise) {
      out += " ELSE ";
      expr(*c.otherwise);
    }
    out += " END";
  }
  void node(const Cast& c) {
    out += "CAST(";
    expr(*c.operand);
    out += " AS " + c.type_name + ")";
  }
  void node(const Paren& p) {
    out += "(";
    expr(*p.inner);
    out += ")";
  }

  void table(const TableRef& t) {
    if (t.subquery) {
      out += "(";
      query(*t.subquery);
      out += ")";
    } else {
      out += render_identifier(t.name);
    }
    if (!t.alias.empty()) out += " AS " + render_identifier(t.alias);
  }

  void select_clause(const SelectCore& core) {
    out += core.distinct ? "SELECT DISTINCT " : "SELECT ";
    for (std::size_t i = 0; i < core.items.size(); ++i) {
      if (i) out += ", ";
      expr(*core.items[i].expr);
      if (!core.items[i].alias.empty()) out += " AS " + render_identifier(core.items[i].alias);
    }
  }

  void core(const SelectCore& c) {
    select_clause(c);
    if (c.from) {
      out += " FROM ";
      table(c.from->first);
      for (const auto& j : c.from->joins) {
        out += j.op == "," ? ", " : " " + j.op + " ";
        table(j.table);
        if (j.on) {
          out += " ON ";
          expr(*j.on);
        } else if (!j.using_columns.empty()) {
          out += " USING (";
          for (std::size_t i = 0; i < j.using_columns.size(); ++i) {
            if (i) out += ", ";
            out += render_identifier(j.using_columns[i]);
          }
          out += ")";
        }
      }
    }
    if (c.where) {
      out += " WHERE ";
      expr(*c.where);
    }
    if (!c.group_by.empty()) {
      out += " GROUP BY ";
      for (std::size_t i = 0; i < c.group_by.size(); ++i) {
        if (i) out += ", ";
        expr(*c.group_by[i]);
      }
    }
    if (c.having) {
      out += " HAVING ";
      expr(*c.having);
    }
  }

  void query(const Query& q) {
    core(q.core);
    for (const auto& op : q.compounds) {
      out += " " + op.op + " ";
      core(op.core);
    }
    if (!q.order_by.empty()) {
      out += " ORDER BY ";
      for (std::size_t i = 0; i < q.order_by.size(); ++i) {
        if (i) out += ", ";
        expr(*q.order_by[i].expr);
        if (!q.order_by[i].direction.empty()) out += " " + q.order_by[i].direction;
      }
    }
    if (q.limit) {
      out += " LIMIT ";
      expr(*q.limit);
    }
    if (q.offset) {
      out += " OFFSET ";
      expr(*q.offset);
    }
  }
};

}  // namespace

ParsedQuery parse_sql(std::string_view sql) {
  Parser parser(sql);
  auto tree = std::make_shared<const Query>(parser.parse_statement());
  return ParsedQuery(std::move(tree), std::string(sql));
}

std::string render(const Query& query, const RenderHooks* hooks) {
  Renderer r{hooks, {}};
  r.query(query);
  return std::move(r.out);
}

std::string render(const Expr& expr, const RenderHooks* hooks) {
  Renderer r{hooks, {}};
  r.expr(expr);
  return std::move(r.out);
}

std::string render_select_clause(const SelectCore& core, const RenderHooks* hooks) {
  Renderer r{hooks, {}};
  r.select_clause(core);
  return std::move(r.out);
}

std::string render_identifier(std::string_view name) {
  if (plain_word(name)) return std::string(name);
  std::string out = "`";
  for (char c : name) {
    if (c == '`') out += '`';
    out += c;
  }
  return out + "`";
}

std::string render_string_literal(std::string_view value, char quote) {
  std::string out(1, quote);
  for (char c : value) {
    if (c == quote) out += quote;
    out += c;
  }
  out += quote;
  return out;
}

}  // namespace sqlsketch::sql
