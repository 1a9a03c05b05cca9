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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prunedb/error.hpp"
#include "prunedb/value.hpp"

namespace prunedb {

enum class ExprKind : std::uint8_t {
  Column,
  Literal,
  Arith,
  Cmp,
  And,
  Or,
  Not,
  If,
  Like,
  StartsWith,
  IsNull,
  InList,
};

enum class ArithOp : std::uint8_t { Add, Sub, Mul, Div };
enum class CmpOp : std::uint8_t { Lt, Le, Eq, Ne, Ge, Gt };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Children are shared, so subtrees can be reused
/// freely between plans.
struct Expr {
  ExprKind kind = ExprKind::Literal;
  ArithOp arith = ArithOp::Add;
  CmpOp cmp = CmpOp::Eq;
  std::string text;  // column name, or the pattern / prefix of Like and StartsWith
  Value value;       // Literal payload
  std::vector<ExprPtr> children;
  std::vector<Value> list;  // InList literals
};

namespace ex {

inline ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

inline ExprPtr col(std::string name) {
  Expr e;
  e.kind = ExprKind::Column;
  e.text = std::move(name);
  return make(std::move(e));
}

inline ExprPtr lit(Value v) {
  Expr e;
  e.kind = ExprKind::Literal;
  e.value = std::move(v);
  return make(std::move(e));
}

inline ExprPtr arith(ArithOp op, ExprPtr a, ExprPtr b) {
  Expr e;
  e.kind = ExprKind::Arith;
  e.arith = op;
  e.children = {std::move(a), std::move(b)};
  return make(std::move(e));
}
inline ExprPtr add(ExprPtr a, ExprPtr b) { return arith(ArithOp::Add, std::move(a), std::move(b)); }
inline ExprPtr sub(ExprPtr a, ExprPtr b) { return arith(ArithOp::Sub, std::move(a), std::move(b)); }
inline ExprPtr mul(ExprPtr a, ExprPtr b) { return arith(ArithOp::Mul, std::move(a), std::move(b)); }
inline ExprPtr div(ExprPtr a, ExprPtr b) { return arith(ArithOp::Div, std::move(a), std::move(b)); }

inline ExprPtr cmp(CmpOp op, ExprPtr a, ExprPtr b) {
  Expr e;
  e.kind = ExprKind::Cmp;
  e.cmp = op;
  e.children = {std::move(a), std::move(b)};
  return make(std::move(e));
}
inline ExprPtr lt(ExprPtr a, ExprPtr b) { return cmp(CmpOp::Lt, std::move(a), std::move(b)); }
inline ExprPtr le(ExprPtr a, ExprPtr b) { return cmp(CmpOp::Le, std::move(a), std::move(b)); }
inline ExprPtr eq(ExprPtr a, ExprPtr b) { return cmp(CmpOp::Eq, std::move(a), std::move(b)); }
inline ExprPtr ne(ExprPtr a, ExprPtr b) { return cmp(CmpOp::Ne, std::move(a), std::move(b)); }
inline ExprPtr ge(ExprPtr a, ExprPtr b) { return cmp(CmpOp::Ge, std::move(a), std::move(b)); }
inline ExprPtr gt(ExprPtr a, ExprPtr b) { return cmp(CmpOp::Gt, std::move(a), std::move(b)); }

inline ExprPtr junction(ExprKind kind, std::vector<ExprPtr> children) {
  Expr e;
  e.kind = kind;
  e.children = std::move(children);
  return make(std::move(e));
}
inline ExprPtr and_(std::vector<ExprPtr> children) { return junction(ExprKind::And, std::move(children)); }
inline ExprPtr or_(std::vector<ExprPtr> children) { return junction(ExprKind::Or, std::move(children)); }

inline ExprPtr not_(ExprPtr a) {
  Expr e;
  e.kind = ExprKind::Not;
  e.children = {std::move(a)};
  return make(std::move(e));
}

inline ExprPtr if_(ExprPtr cond, ExprPtr then, ExprPtr otherwise) {
  Expr e;
  e.kind = ExprKind::If;
  e.children = {std::move(cond), std::move(then), std::move(otherwise)};
  return make(std::move(e));
}

inline ExprPtr like(ExprPtr a, std::string pattern) {
  Expr e;
  e.kind = ExprKind::Like;
  e.text = std::move(pattern);
  e.children = {std::move(a)};
  return make(std::move(e));
}

inline ExprPtr starts_with(ExprPtr a, std::string prefix) {
  Expr e;
  e.kind = ExprKind::StartsWith;
  e.text = std::move(prefix);
  e.children = {std::move(a)};
  return make(std::move(e));
}

inline ExprPtr is_null(ExprPtr a) {
  Expr e;
  e.kind = ExprKind::IsNull;
  e.children = {std::move(a)};
  return make(std::move(e));
}

inline ExprPtr in_list(ExprPtr a, std::vector<Value> values) {
  Expr e;
  e.kind = ExprKind::InList;
  e.children = {std::move(a)};
  e.list = std::move(values);
  return make(std::move(e));
}

inline ExprPtr truth() { return lit(Value(true)); }

}  // namespace ex

inline std::string_view arith_symbol(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

inline std::string_view cmp_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Ge: return ">=";
    case CmpOp::Gt: return ">";
  }
  return "?";
}

/// a op b  <=>  b flip(op) a
inline CmpOp flip(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Ge: return CmpOp::Le;
    case CmpOp::Gt: return CmpOp::Lt;
    default: return op;
  }
}

/// NOT (a op b)  <=>  a negate(op) b, for non-null operands.
inline CmpOp negate(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Ge: return CmpOp::Lt;
    case CmpOp::Gt: return CmpOp::Le;
  }
  return op;
}

inline std::string quote_sql(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "''";
    else out.push_back(c);
  }
  return out + "'";
}

inline std::string literal_sql(const Value& v) {
  if (v.type() == Type::Utf8) return quote_sql(v.as_string());
  if (v.type() == Type::Bool) return v.as_bool() ? "TRUE" : "FALSE";
  return v.to_string();
}

/// SQL-like rendering, fully parenthesized for nested operators.
inline std::string to_string(const Expr& e) {
  auto child = [&](std::size_t i) { return to_string(*e.children[i]); };
  switch (e.kind) {
    case ExprKind::Column: return e.text;
    case ExprKind::Literal: return literal_sql(e.value);
    case ExprKind::Arith:
      return "(" + child(0) + " " + std::string(arith_symbol(e.arith)) + " " + child(1) + ")";
    case ExprKind::Cmp:
      return "(" + child(0) + " " + std::string(cmp_symbol(e.cmp)) + " " + child(1) + ")";
    case ExprKind::And:
    case ExprKind::Or: {
      std::string sep = e.kind == ExprKind::And ? " AND " : " OR ";
      std::string out = "(";
      for (std::size_t i = 0; i < e.children.size(); ++i) out += (i ? sep : "") + child(i);
      return out + ")";
    }
    case ExprKind::Not: return "(NOT " + child(0) + ")";
    case ExprKind::If: return "IF(" + child(0) + ", " + child(1) + ", " + child(2) + ")";
    case ExprKind::Like: return "(" + child(0) + " LIKE " + quote_sql(e.text) + ")";
    case ExprKind::StartsWith: return "STARTSWITH(" + child(0) + ", " + quote_sql(e.text) + ")";
    case ExprKind::IsNull: return "(" + child(0) + " IS NULL)";
    case ExprKind::InList: {
      std::string out = "(" + child(0) + " IN (";
      for (std::size_t i = 0; i < e.list.size(); ++i) out += (i ? ", " : "") + literal_sql(e.list[i]);
      return out + "))";
    }
  }
  return "?";
}

inline std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e.children) n += node_count(*c);
  return n;
}

inline void collect_columns(const Expr& e, std::set<std::string>& out) {
  if (e.kind == ExprKind::Column) out.insert(e.text);
  for (const auto& c : e.children) collect_columns(*c, out);
}

inline std::set<std::string> referenced_columns(const Expr& e) {
  std::set<std::string> out;
  collect_columns(e, out);
  return out;
}

/// Structural equality of two expression trees.
inline bool same_expr(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.text != b.text || a.children.size() != b.children.size() ||
      a.list.size() != b.list.size())
    return false;
  if (a.kind == ExprKind::Arith && a.arith != b.arith) return false;
  if (a.kind == ExprKind::Cmp && a.cmp != b.cmp) return false;
  if (a.kind == ExprKind::Literal && !(a.value == b.value)) return false;
  for (std::size_t i = 0; i < a.list.size(); ++i) {
    if (!(a.list[i] == b.list[i])) return false;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!same_expr(*a.children[i], *b.children[i])) return false;
  }
  return true;
}

/// Rebuilds `e` with every column reference replaced by `fn(name)` (or kept
/// when fn returns nullptr).
inline ExprPtr substitute_columns(const ExprPtr& e,
                                  const std::function<ExprPtr(const std::string&)>& fn) {
  if (e->kind == ExprKind::Column) {
    ExprPtr r = fn(e->text);
    return r ? r : e;
  }
  if (e->children.empty()) return e;
  Expr copy = *e;
  for (auto& c : copy.children) c = substitute_columns(c, fn);
  return ex::make(std::move(copy));
}

// ---------------------------------------------------------------------------
// Type checking

using TypeResolver = std::function<std::optional<Type>(const std::string&)>;

namespace detail {

inline Type unify_branch_types(Type a, Type b) {
  if (a == Type::Null) return b;
  if (b == Type::Null) return a;
  if (a == b) return a;
  if (is_numeric(a) && is_numeric(b)) return Type::Float64;
  throw TypeError("IF branches have incompatible types " + std::string(type_name(a)) + " and " +
                  std::string(type_name(b)));
}

inline void expect_bool(Type t, std::string_view where) {
  if (t != Type::Bool && t != Type::Null)
    throw TypeError(std::string(where) + " expects a boolean operand, got " + std::string(type_name(t)));
}

inline void expect_string(Type t, std::string_view where) {
  if (t != Type::Utf8 && t != Type::Null)
    throw TypeError(std::string(where) + " expects a string operand, got " + std::string(type_name(t)));
}

}  // namespace detail

/// Infers the result type of `e`, rejecting ill-typed trees. Columns are
/// resolved through `resolve`; an unresolvable column is a BindError.
inline Type check_type(const Expr& e, const TypeResolver& resolve) {
  auto child = [&](std::size_t i) { return check_type(*e.children[i], resolve); };
  switch (e.kind) {
    case ExprKind::Column: {
      auto t = resolve(e.text);
      if (!t) throw BindError("unknown column '" + e.text + "'");
      return *t;
    }
    case ExprKind::Literal: return e.value.type();
    case ExprKind::Arith: {
      Type a = child(0), b = child(1);
      for (Type t : {a, b}) {
        if (t != Type::Null && !is_numeric(t))
          throw TypeError("arithmetic on non-numeric operand of type " + std::string(type_name(t)));
      }
      if (e.arith == ArithOp::Div || a == Type::Float64 || b == Type::Float64) return Type::Float64;
      return Type::Int64;
    }
    case ExprKind::Cmp: {
      Type a = child(0), b = child(1);
      if (a != Type::Null && b != Type::Null && !comparable(a, b))
        throw TypeError("cannot compare " + std::string(type_name(a)) + " with " +
                        std::string(type_name(b)));
      return Type::Bool;
    }
    case ExprKind::And:
    case ExprKind::Or:
      if (e.children.empty()) throw TypeError("empty AND/OR");
      for (std::size_t i = 0; i < e.children.size(); ++i) detail::expect_bool(child(i), "AND/OR");
      return Type::Bool;
    case ExprKind::Not: detail::expect_bool(child(0), "NOT"); return Type::Bool;
    case ExprKind::If:
      detail::expect_bool(child(0), "IF condition");
      return detail::unify_branch_types(child(1), child(2));
    case ExprKind::Like: detail::expect_string(child(0), "LIKE"); return Type::Bool;
    case ExprKind::StartsWith: detail::expect_string(child(0), "STARTSWITH"); return Type::Bool;
    case ExprKind::IsNull: child(0); return Type::Bool;
    case ExprKind::InList: {
      Type a = child(0);
      for (const auto& v : e.list) {
        if (a != Type::Null && !v.is_null() && !comparable(a, v.type()))
          throw TypeError("IN list value of type " + std::string(type_name(v.type())) +
                          " does not match " + std::string(type_name(a)));
      }
      return Type::Bool;
    }
  }
  throw TypeError("unknown expression kind");
}

// ---------------------------------------------------------------------------
// Row evaluation

/// LIKE with '%' (any run) and '_' (any single byte); no escape character.
inline bool like_match(std::string_view s, std::string_view p) {
  std::size_t si = 0, pi = 0, star_p = std::string_view::npos, star_s = 0;
  while (si < s.size()) {
    if (pi < p.size() && (p[pi] == '_' || (p[pi] != '%' && p[pi] == s[si]))) {
      ++si;
      ++pi;
    } else if (pi < p.size() && p[pi] == '%') {
      star_p = pi++;
      star_s = si;
    } else if (star_p != std::string_view::npos) {
      pi = star_p + 1;
      si = ++star_s;
    } else {
      return false;
    }
  }
  while (pi < p.size() && p[pi] == '%') ++pi;
  return pi == p.size();
}

namespace detail {

inline Value arith_values(ArithOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value::null();
  if (op == ArithOp::Div) {
    double d = b.to_double();
    if (d == 0.0) return Value::null();
    return Value(a.to_double() / d);
  }
  if (a.type() == Type::Int64 && b.type() == Type::Int64) {
    std::int64_t r = 0;
    bool overflow = false;
    switch (op) {
      case ArithOp::Add: overflow = __builtin_add_overflow(a.as_int(), b.as_int(), &r); break;
      case ArithOp::Sub: overflow = __builtin_sub_overflow(a.as_int(), b.as_int(), &r); break;
      case ArithOp::Mul: overflow = __builtin_mul_overflow(a.as_int(), b.as_int(), &r); break;
      case ArithOp::Div: break;
    }
    if (overflow) throw ExecutionError("int64 overflow in arithmetic");
    return Value(r);
  }
  double x = a.to_double(), y = b.to_double();
  switch (op) {
    case ArithOp::Add: return Value(x + y);
    case ArithOp::Sub: return Value(x - y);
    case ArithOp::Mul: return Value(x * y);
    case ArithOp::Div: break;
  }
  return Value::null();
}

inline bool cmp_holds(CmpOp op, std::weak_ordering o) {
  switch (op) {
    case CmpOp::Lt: return o < 0;
    case CmpOp::Le: return o <= 0;
    case CmpOp::Eq: return o == 0;
    case CmpOp::Ne: return o != 0;
    case CmpOp::Ge: return o >= 0;
    case CmpOp::Gt: return o > 0;
  }
  return false;
}

}  // namespace detail

/// Evaluates `e` against one row with SQL three-valued semantics. `row` is any
/// callable mapping a column name to its Value.
template <class RowLookup>
Value eval_row(const Expr& e, const RowLookup& row) {
  switch (e.kind) {
    case ExprKind::Column: return row(e.text);
    case ExprKind::Literal: return e.value;
    case ExprKind::Arith:
      return detail::arith_values(e.arith, eval_row(*e.children[0], row), eval_row(*e.children[1], row));
    case ExprKind::Cmp: {
      Value a = eval_row(*e.children[0], row);
      Value b = eval_row(*e.children[1], row);
      if (a.is_null() || b.is_null()) return Value::null();
      return Value(detail::cmp_holds(e.cmp, compare(a, b)));
    }
    case ExprKind::And: {
      bool saw_null = false;
      for (const auto& c : e.children) {
        Value v = eval_row(*c, row);
        if (v.is_null()) saw_null = true;
        else if (!v.as_bool()) return Value(false);
      }
      return saw_null ? Value::null() : Value(true);
    }
    case ExprKind::Or: {
      bool saw_null = false;
      for (const auto& c : e.children) {
        Value v = eval_row(*c, row);
        if (v.is_null()) saw_null = true;
        else if (v.as_bool()) return Value(true);
      }
      return saw_null ? Value::null() : Value(false);
    }
    case ExprKind::Not: {
      Value v = eval_row(*e.children[0], row);
      return v.is_null() ? v : Value(!v.as_bool());
    }
    case ExprKind::If: {
      Value c = eval_row(*e.children[0], row);
      bool take_then = !c.is_null() && c.as_bool();
      return eval_row(*e.children[take_then ? 1 : 2], row);
    }
    case ExprKind::Like: {
      Value v = eval_row(*e.children[0], row);
      if (v.is_null()) return v;
      return Value(like_match(v.as_string(), e.text));
    }
    case ExprKind::StartsWith: {
      Value v = eval_row(*e.children[0], row);
      if (v.is_null()) return v;
      return Value(v.as_string().compare(0, e.text.size(), e.text) == 0 &&
                   v.as_string().size() >= e.text.size());
    }
    case ExprKind::IsNull: return Value(eval_row(*e.children[0], row).is_null());
    case ExprKind::InList: {
      Value v = eval_row(*e.children[0], row);
      if (v.is_null()) return v;
      bool saw_null = false;
      for (const auto& item : e.list) {
        if (item.is_null()) saw_null = true;
        else if (compare(v, item) == 0) return Value(true);
      }
      return saw_null ? Value::null() : Value(false);
    }
  }
  throw ExecutionError("unknown expression kind");
}

/// Filter semantics: only TRUE passes; FALSE and NULL reject the row.
template <class RowLookup>
bool passes(const Expr& predicate, const RowLookup& row) {
  Value v = eval_row(predicate, row);
  return !v.is_null() && v.as_bool();
}

}  // namespace prunedb
