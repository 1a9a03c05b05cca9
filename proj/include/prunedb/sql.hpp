// Licensed to the Apache Software Foundation (ASF) under one
// or more contributor license agreements.  See the NOTICE file
// distributed with this work for additional information
// regarding copyright ownership.  The ASF licenses this file
// to you under the Apache License, Version 2.0 (the
// "License"); you may not use this file except in compliance
// with the License.  You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

// SQL subset:
//
//   SELECT (* | item [, item ...])
//   FROM table [[AS] alias]
//   [[INNER | LEFT [OUTER]] JOIN table [[AS] alias] ON a = b [AND c = d ...]]
//   [WHERE predicate]
//   [GROUP BY column [, column ...]]
//   [ORDER BY expr [ASC | DESC]]
//   [LIMIT n [OFFSET m]] [;]
//
//   item := expr [AS name] | COUNT(*) | (COUNT | SUM | MIN | MAX)(expr) [AS name]
//
// Expressions: OR, AND, NOT, comparisons, [NOT] LIKE 'pattern',
// [NOT] IN (literals), IS [NOT] NULL, + - * /, unary minus, IF(c, a, b),
// STARTSWITH(e, 'prefix'), literals (integers, decimals, 'strings', TRUE,
// FALSE, NULL) and column names, optionally qualified.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prunedb/limit_planner.hpp"
#include "prunedb/plan.hpp"

namespace prunedb {

struct SelectItem {
  bool star = false;
  std::optional<AggFunc> agg;
  ExprPtr expr;  // null for COUNT(*) and *
  std::string alias;
};

struct TableRef {
  std::string table, alias;
};

struct JoinClause {
  JoinKind kind = JoinKind::Inner;
  TableRef right;
  std::vector<std::pair<ExprPtr, ExprPtr>> equalities;  // as written
};

struct OrderClause {
  std::optional<AggFunc> agg;
  ExprPtr expr;  // null for COUNT(*)
  Direction direction = Direction::Asc;
};

/// Parsed, unbound SELECT statement. Column names are as written.
struct SelectStatement {
  std::vector<SelectItem> items;
  TableRef from;
  std::optional<JoinClause> join;
  ExprPtr where;
  std::vector<ExprPtr> group_by;
  std::optional<OrderClause> order;
  std::optional<std::uint64_t> limit;
  std::uint64_t offset = 0;
};

namespace sql_detail {

enum class Tok : std::uint8_t { Ident, QuotedIdent, Int, Float, String, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t begin = 0, end = 0, line = 1, column = 1;
};

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, line_start = 0;
  auto fail = [&](std::string msg, std::size_t b, std::size_t e) -> ParseError {
    return ParseError(std::move(msg), line, b - line_start + 1, b, e);
  };
  while (true) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
      if (s[i] == '\n') {
        ++line;
        line_start = i + 1;
      }
      ++i;
    }
    if (i + 1 < s.size() && s[i] == '-' && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.begin = i;
    t.line = line;
    t.column = i - line_start + 1;
    if (i >= s.size()) {
      t.kind = Tok::End;
      t.end = i;
      out.push_back(t);
      return out;
    }
    char c = s[i];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      t.kind = Tok::Ident;
      t.text = std::string(s.substr(t.begin, i - t.begin));
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      bool is_float = false;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i < s.size() && s[i] == '.') {
        is_float = true;
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      }
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          is_float = true;
          i = j;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
      }
      t.kind = is_float ? Tok::Float : Tok::Int;
      t.text = std::string(s.substr(t.begin, i - t.begin));
    } else if (c == '\'' || c == '"') {
      ++i;
      std::string text;
      while (true) {
        if (i >= s.size()) throw fail("unterminated quoted text", t.begin, i);
        if (s[i] == c) {
          if (i + 1 < s.size() && s[i + 1] == c) {
            text += c;
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (s[i] == '\n') {
          ++line;
          line_start = i + 1;
        }
        text += s[i++];
      }
      t.kind = c == '\'' ? Tok::String : Tok::QuotedIdent;
      t.text = std::move(text);
    } else {
      static const char* kTwo[] = {"<=", ">=", "<>", "!="};
      t.kind = Tok::Symbol;
      for (const char* two : kTwo) {
        if (s.substr(i, 2) == two) t.text = two;
      }
      if (t.text.empty()) {
        if (std::string_view("=<>+-*/(),.;").find(c) == std::string_view::npos)
          throw fail(std::string("unexpected character '") + c + "'", i, i + 1);
        t.text = std::string(1, c);
      }
      i += t.text.size();
    }
    t.end = i;
    out.push_back(std::move(t));
  }
}

inline bool is_reserved(std::string_view w) {
  static const char* kWords[] = {"SELECT", "FROM",  "WHERE", "GROUP", "BY",    "ORDER", "LIMIT", "OFFSET",
                                 "JOIN",   "INNER", "LEFT",  "OUTER", "ON",    "AND",   "OR",    "NOT",
                                 "AS",     "ASC",   "DESC",  "LIKE",  "IN",    "IS",    "NULL",  "TRUE",
                                 "FALSE"};
  for (const char* k : kWords) {
    if (iequals(w, k)) return true;
  }
  return false;
}

inline std::optional<AggFunc> agg_keyword(std::string_view w) {
  if (iequals(w, "COUNT")) return AggFunc::Count;
  if (iequals(w, "SUM")) return AggFunc::Sum;
  if (iequals(w, "MIN")) return AggFunc::Min;
  if (iequals(w, "MAX")) return AggFunc::Max;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  SelectStatement statement() {
    SelectStatement st;
    expect_kw("SELECT");
    do {
      st.items.push_back(select_item());
    } while (accept_sym(","));
    expect_kw("FROM");
    st.from = table_ref();
    if (peek_kw("JOIN") || peek_kw("INNER") || peek_kw("LEFT")) {
      JoinClause j;
      if (accept_kw("LEFT")) {
        j.kind = JoinKind::LeftOuter;
        accept_kw("OUTER");
      } else {
        accept_kw("INNER");
      }
      expect_kw("JOIN");
      j.right = table_ref();
      expect_kw("ON");
      do {
        ExprPtr l = additive();
        if (!accept_sym("=")) throw error_at(peek(), "expected '=' in join condition");
        ExprPtr r = additive();
        j.equalities.emplace_back(l, r);
      } while (accept_kw("AND"));
      st.join = std::move(j);
    }
    if (accept_kw("WHERE")) st.where = expr();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do {
        st.group_by.push_back(expr());
      } while (accept_sym(","));
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      OrderClause o;
      if (auto a = peek_aggregate()) {
        o.agg = a;
        o.expr = aggregate_arg(*o.agg);
      } else {
        o.expr = expr();
      }
      if (accept_kw("DESC")) o.direction = Direction::Desc;
      else accept_kw("ASC");
      st.order = std::move(o);
    }
    if (accept_kw("LIMIT")) {
      st.limit = unsigned_int("LIMIT");
      if (accept_kw("OFFSET")) st.offset = unsigned_int("OFFSET");
    }
    accept_sym(";");
    if (peek().kind != Tok::End) throw error_at(peek(), "unexpected '" + peek().text + "'");
    return st;
  }

  ExprPtr standalone_expr() {
    ExprPtr e = expr();
    if (peek().kind != Tok::End) throw error_at(peek(), "unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  static ParseError error_at(const Token& t, const std::string& msg) {
    std::string where = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    return ParseError(msg + " near " + where, t.line, t.column, t.begin, t.end);
  }

  bool peek_kw(std::string_view kw, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && iequals(peek(ahead).text, kw);
  }
  bool accept_kw(std::string_view kw) {
    if (!peek_kw(kw)) return false;
    ++pos_;
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) throw error_at(peek(), "expected " + std::string(kw));
  }
  bool peek_sym(std::string_view s) const { return peek().kind == Tok::Symbol && peek().text == s; }
  bool accept_sym(std::string_view s) {
    if (!peek_sym(s)) return false;
    ++pos_;
    return true;
  }
  void expect_sym(std::string_view s) {
    if (!accept_sym(s)) throw error_at(peek(), "expected '" + std::string(s) + "'");
  }

  std::string identifier(const char* what) {
    const Token& t = peek();
    if (t.kind == Tok::QuotedIdent || (t.kind == Tok::Ident && !is_reserved(t.text))) {
      ++pos_;
      return t.text;
    }
    throw error_at(t, std::string("expected ") + what);
  }

  std::uint64_t unsigned_int(const char* clause) {
    const Token& t = peek();
    if (t.kind != Tok::Int) throw error_at(t, std::string(clause) + " needs a non-negative integer");
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) throw error_at(t, "integer out of range");
    ++pos_;
    return v;
  }

  TableRef table_ref() {
    TableRef r;
    r.table = identifier("table name");
    if (accept_kw("AS")) r.alias = identifier("alias");
    else if (peek().kind == Tok::QuotedIdent || (peek().kind == Tok::Ident && !is_reserved(peek().text)))
      r.alias = identifier("alias");
    if (r.alias.empty()) r.alias = r.table;
    return r;
  }

  std::optional<AggFunc> peek_aggregate() const {
    if (peek().kind != Tok::Ident || !(peek(1).kind == Tok::Symbol && peek(1).text == "(")) return std::nullopt;
    return agg_keyword(peek().text);
  }

  /// Consumes NAME '(' ... ')' of an aggregate call; returns the argument.
  ExprPtr aggregate_arg(AggFunc& f) {
    next();
    expect_sym("(");
    ExprPtr arg;
    if (f == AggFunc::Count && accept_sym("*")) {
      f = AggFunc::CountStar;
    } else {
      arg = expr();
    }
    expect_sym(")");
    return arg;
  }

  SelectItem select_item() {
    SelectItem item;
    if (accept_sym("*")) {
      item.star = true;
      return item;
    }
    if (auto a = peek_aggregate()) {
      item.agg = a;
      item.expr = aggregate_arg(*item.agg);
    } else {
      item.expr = expr();
    }
    if (accept_kw("AS")) item.alias = identifier("alias");
    return item;
  }

  ExprPtr expr() {
    std::vector<ExprPtr> terms{and_expr()};
    while (accept_kw("OR")) terms.push_back(and_expr());
    return terms.size() == 1 ? terms[0] : ex::or_(std::move(terms));
  }

  ExprPtr and_expr() {
    std::vector<ExprPtr> terms{not_expr()};
    while (accept_kw("AND")) terms.push_back(not_expr());
    return terms.size() == 1 ? terms[0] : ex::and_(std::move(terms));
  }

  ExprPtr not_expr() {
    if (accept_kw("NOT")) return ex::not_(not_expr());
    return predicate();
  }

  ExprPtr predicate() {
    ExprPtr left = additive();
    static const std::pair<const char*, CmpOp> kOps[] = {{"=", CmpOp::Eq},  {"<>", CmpOp::Ne}, {"!=", CmpOp::Ne},
                                                        {"<=", CmpOp::Le}, {">=", CmpOp::Ge}, {"<", CmpOp::Lt},
                                                        {">", CmpOp::Gt}};
    for (auto [sym, op] : kOps) {
      if (accept_sym(sym)) return ex::cmp(op, left, additive());
    }
    bool negated = false;
    if (peek_kw("NOT") && (peek_kw("LIKE", 1) || peek_kw("IN", 1))) {
      ++pos_;
      negated = true;
    }
    if (accept_kw("LIKE")) {
      const Token& t = peek();
      if (t.kind != Tok::String) throw error_at(t, "LIKE needs a string pattern");
      ++pos_;
      ExprPtr e = ex::like(left, t.text);
      return negated ? ex::not_(e) : e;
    }
    if (accept_kw("IN")) {
      expect_sym("(");
      std::vector<Value> list;
      do {
        ExprPtr v = unary();
        if (v->kind != ExprKind::Literal) throw error_at(peek(), "IN lists hold literals only");
        list.push_back(v->value);
      } while (accept_sym(","));
      expect_sym(")");
      ExprPtr e = ex::in_list(left, std::move(list));
      return negated ? ex::not_(e) : e;
    }
    if (accept_kw("IS")) {
      bool is_not = accept_kw("NOT");
      expect_kw("NULL");
      ExprPtr e = ex::is_null(left);
      return is_not ? ex::not_(e) : e;
    }
    return left;
  }

  ExprPtr additive() {
    ExprPtr e = multiplicative();
    while (true) {
      if (accept_sym("+")) e = ex::add(e, multiplicative());
      else if (accept_sym("-")) e = ex::sub(e, multiplicative());
      else return e;
    }
  }

  ExprPtr multiplicative() {
    ExprPtr e = unary();
    while (true) {
      if (accept_sym("*")) e = ex::mul(e, unary());
      else if (accept_sym("/")) e = ex::div(e, unary());
      else return e;
    }
  }

  ExprPtr unary() {
    if (accept_sym("-")) {
      const Token& t = peek();
      if (t.kind == Tok::Int || t.kind == Tok::Float) return number(true);
      return ex::sub(ex::lit(Value(std::int64_t{0})), unary());
    }
    return primary();
  }

  ExprPtr number(bool negative) {
    const Token& t = next();
    std::string text = (negative ? "-" : "") + t.text;
    if (t.kind == Tok::Int) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc() && p == text.data() + text.size()) return ex::lit(Value(v));
    }
    try {
      return ex::lit(Value(std::stod(text)));
    } catch (const std::exception&) {
      throw error_at(t, "bad number");
    }
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int:
      case Tok::Float: return number(false);
      case Tok::String: ++pos_; return ex::lit(Value(t.text));
      case Tok::Symbol:
        if (accept_sym("(")) {
          ExprPtr e = expr();
          expect_sym(")");
          return e;
        }
        throw error_at(t, "expected an expression");
      case Tok::End: throw error_at(t, "expected an expression");
      case Tok::QuotedIdent:
      case Tok::Ident: break;
    }
    if (t.kind == Tok::Ident) {
      if (accept_kw("TRUE")) return ex::lit(Value(true));
      if (accept_kw("FALSE")) return ex::lit(Value(false));
      if (accept_kw("NULL")) return ex::lit(Value::null());
      bool call = peek(1).kind == Tok::Symbol && peek(1).text == "(";
      if (call && iequals(t.text, "IF")) {
        pos_ += 2;
        ExprPtr c = expr();
        expect_sym(",");
        ExprPtr a = expr();
        expect_sym(",");
        ExprPtr b = expr();
        expect_sym(")");
        return ex::if_(c, a, b);
      }
      if (call && iequals(t.text, "STARTSWITH")) {
        pos_ += 2;
        ExprPtr a = expr();
        expect_sym(",");
        const Token& p = peek();
        if (p.kind != Tok::String) throw error_at(p, "STARTSWITH needs a string prefix");
        ++pos_;
        expect_sym(")");
        return ex::starts_with(a, p.text);
      }
      if (call && agg_keyword(t.text)) throw error_at(t, "aggregates are only allowed as whole select items or ORDER BY keys");
      if (call) throw error_at(t, "unknown function '" + t.text + "'");
    }
    std::string name = identifier("column name");
    if (accept_sym(".")) name += "." + identifier("column name");
    return ex::col(name);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace sql_detail

/// Parses one SELECT statement. Throws ParseError with line, column and byte
/// range of the offending token.
inline SelectStatement parse_sql(std::string_view text) { return sql_detail::Parser(text).statement(); }

/// Parses a standalone expression (column names unbound).
inline ExprPtr parse_expr(std::string_view text) { return sql_detail::Parser(text).standalone_expr(); }

namespace sql_detail {

struct Binder {
  const Catalog& catalog;
  std::vector<std::pair<std::string, const Table*>> tables;  // alias, table

  std::string resolve(const std::string& name) const {
    auto dot = name.find('.');
    if (dot != std::string::npos) {
      std::string alias = name.substr(0, dot), col = name.substr(dot + 1);
      for (const auto& [a, t] : tables) {
        if (a == alias) {
          if (!t->schema().index_of(col)) throw BindError("unknown column '" + name + "'");
          return name;
        }
      }
      throw BindError("unknown table or alias '" + alias + "'");
    }
    std::string found;
    for (const auto& [a, t] : tables) {
      if (t->schema().index_of(name)) {
        if (!found.empty()) throw BindError("ambiguous column '" + name + "'");
        found = a + "." + name;
      }
    }
    if (found.empty()) throw BindError("unknown column '" + name + "'");
    return found;
  }

  ExprPtr bind(const ExprPtr& e) const {
    return substitute_columns(e, [this](const std::string& n) { return ex::col(resolve(n)); });
  }

  /// Aliases of the tables `e` references.
  std::set<std::string> aliases(const Expr& e) const {
    std::set<std::string> out;
    for (const auto& c : referenced_columns(e)) out.insert(c.substr(0, c.find('.')));
    return out;
  }
};

inline std::string default_agg_name(AggFunc f, const ExprPtr& arg) {
  if (f == AggFunc::CountStar) return "count(*)";
  return std::string(agg_name(f)) + "(" + to_string(*arg) + ")";
}

inline void flatten_and(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (e->kind == ExprKind::And) {
    for (const auto& c : e->children) flatten_and(c, out);
  } else {
    out.push_back(e);
  }
}

}  // namespace sql_detail

/// Binds a parsed statement against the catalog and builds the plan:
/// single-table WHERE conjuncts are pushed onto their scan (for a LEFT JOIN
/// only those on the preserved side), an inner join builds on the smaller
/// table, ORDER BY becomes TopK with k = limit + offset, and a final Project
/// shapes the select list.
inline PlanPtr bind_statement(const SelectStatement& st, const Catalog& catalog) {
  sql_detail::Binder b{catalog, {}};
  b.tables.emplace_back(st.from.alias, &catalog.at(st.from.table));
  if (st.join) {
    if (st.join->right.alias == st.from.alias) throw BindError("duplicate table alias '" + st.from.alias + "'");
    b.tables.emplace_back(st.join->right.alias, &catalog.at(st.join->right.table));
  }

  // WHERE: per-scan conjuncts and the rest.
  std::map<std::string, std::vector<ExprPtr>> pushed;
  std::vector<ExprPtr> above;
  if (st.where) {
    std::vector<ExprPtr> conjuncts;
    sql_detail::flatten_and(b.bind(st.where), conjuncts);
    for (auto& c : conjuncts) {
      if (c->kind == ExprKind::Literal && c->value.type() == Type::Bool && c->value.as_bool()) continue;
      auto refs = b.aliases(*c);
      bool pushable = refs.size() == 1 &&
                      (!st.join || st.join->kind == JoinKind::Inner || *refs.begin() == st.from.alias);
      if (pushable) pushed[*refs.begin()].push_back(c);
      else above.push_back(c);
    }
  }
  auto scan_of = [&](const TableRef& r) {
    PlanPtr p = plan::scan(r.table, r.alias);
    auto it = pushed.find(r.alias);
    if (it != pushed.end()) p = plan::filter(p, it->second.size() == 1 ? it->second[0] : ex::and_(it->second));
    return p;
  };

  PlanPtr source = scan_of(st.from);
  if (st.join) {
    PlanPtr left = source;
    PlanPtr right = scan_of(st.join->right);
    std::vector<JoinKey> keys;  // (left side, right side)
    for (const auto& [l, r] : st.join->equalities) {
      ExprPtr bl = b.bind(l), br = b.bind(r);
      auto al = b.aliases(*bl), ar = b.aliases(*br);
      auto only = [](const std::set<std::string>& s, const std::string& a) { return s.size() == 1 && *s.begin() == a; };
      if (only(al, st.from.alias) && only(ar, st.join->right.alias)) keys.push_back({bl, br});
      else if (only(ar, st.from.alias) && only(al, st.join->right.alias)) keys.push_back({br, bl});
      else throw BindError("join condition must compare one column of each table");
    }
    bool swap = st.join->kind == JoinKind::Inner &&
                catalog.at(st.join->right.table).row_count() < catalog.at(st.from.table).row_count();
    if (swap) {
      for (auto& k : keys) std::swap(k.build, k.probe);
      source = plan::hash_join(JoinKind::Inner, right, left, std::move(keys));
    } else {
      source = plan::hash_join(st.join->kind, left, right, std::move(keys));
    }
  }
  if (!above.empty()) source = plan::filter(source, above.size() == 1 ? above[0] : ex::and_(above));

  bool aggregate = !st.group_by.empty() || (st.order && st.order->agg) ||
                   std::any_of(st.items.begin(), st.items.end(), [](const SelectItem& i) { return i.agg.has_value(); });
  auto alias_item = [&](const ExprPtr& e) -> const SelectItem* {
    if (!e || e->kind != ExprKind::Column) return nullptr;
    for (const auto& i : st.items) {
      if (!i.alias.empty() && i.alias == e->text) return &i;
    }
    return nullptr;
  };

  std::uint64_t limit = st.limit.value_or(kNoLimit);
  std::uint64_t k = st.limit ? LimitSpec{limit, st.offset}.effective_k() : kNoLimit;
  auto finish_order_limit = [&](PlanPtr p, const ExprPtr& order) {
    if (order) {
      p = plan::topk(p, order, st.order->direction, k);
      if (st.limit && (st.offset > 0 || limit == 0)) p = plan::limit(p, limit, st.offset);
      else if (!st.limit && st.offset > 0) p = plan::limit(p, kNoLimit, st.offset);
    } else if (st.limit || st.offset > 0) {
      p = plan::limit(p, limit, st.offset);
    }
    return p;
  };

  if (!aggregate) {
    ExprPtr order;
    if (st.order) {
      const SelectItem* a = alias_item(st.order->expr);
      order = b.bind(a ? a->expr : st.order->expr);
    }
    PlanPtr p = finish_order_limit(source, order);
    bool plain_star = !st.join && st.items.size() == 1 && st.items[0].star;
    if (plain_star) return p;
    std::vector<ProjectItem> items;
    for (const auto& item : st.items) {
      if (item.star) {
        for (const auto& [alias, t] : b.tables) {
          for (const auto& c : t->schema().columns()) items.push_back({alias + "." + c.name, ex::col(alias + "." + c.name)});
        }
        continue;
      }
      ExprPtr e = b.bind(item.expr);
      items.push_back({item.alias.empty() ? to_string(*e) : item.alias, e});
    }
    return plan::project(p, std::move(items));
  }

  // Aggregation.
  std::vector<ExprPtr> keys;
  for (const auto& g : st.group_by) {
    ExprPtr e = b.bind(g);
    if (e->kind != ExprKind::Column) throw BindError("GROUP BY supports columns only, got " + to_string(*e));
    keys.push_back(e);
  }
  std::vector<Aggregate> aggs;
  auto add_agg = [&](AggFunc f, const ExprPtr& raw_arg, const std::string& alias) -> std::string {
    ExprPtr arg = raw_arg ? b.bind(raw_arg) : nullptr;
    for (const auto& a : aggs) {
      bool same_arg = (!a.arg && !arg) || (a.arg && arg && same_expr(*a.arg, *arg));
      if (a.func == f && same_arg && (alias.empty() || a.name == alias)) return a.name;
    }
    std::string name = alias.empty() ? sql_detail::default_agg_name(f, arg) : alias;
    aggs.push_back({f, arg, name});
    return name;
  };
  auto key_only = [&](const ExprPtr& e) {
    for (const auto& c : referenced_columns(*e)) {
      bool is_key = std::any_of(keys.begin(), keys.end(), [&](const ExprPtr& k) { return k->text == c; });
      if (!is_key) throw BindError("column '" + c + "' must appear in GROUP BY or inside an aggregate");
    }
    return e;
  };
  std::vector<ProjectItem> items;
  for (const auto& item : st.items) {
    if (item.star) throw BindError("SELECT * cannot be combined with aggregation");
    if (item.agg) {
      std::string name = add_agg(*item.agg, item.expr, item.alias);
      items.push_back({item.alias.empty() ? name : item.alias, ex::col(name)});
    } else {
      ExprPtr e = key_only(b.bind(item.expr));
      items.push_back({item.alias.empty() ? to_string(*e) : item.alias, e});
    }
  }
  ExprPtr order;
  if (st.order) {
    if (st.order->agg) {
      order = ex::col(add_agg(*st.order->agg, st.order->expr, ""));
    } else if (const SelectItem* a = alias_item(st.order->expr)) {
      order = a->agg ? ex::col(add_agg(*a->agg, a->expr, a->alias)) : key_only(b.bind(a->expr));
    } else {
      order = key_only(b.bind(st.order->expr));
    }
  }
  PlanPtr p = plan::group_by(source, keys, aggs);
  p = finish_order_limit(p, order);
  return plan::project(p, std::move(items));
}

/// Parse and bind in one step.
inline PlanPtr sql_to_plan(std::string_view text, const Catalog& catalog) {
  return bind_statement(parse_sql(text), catalog);
}

}  // namespace prunedb
