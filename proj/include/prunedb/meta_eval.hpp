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

// Evaluation of expressions over zone-map metadata instead of rows.
//
// derive_interval() bounds the values a scalar expression can take in a
// partition. eval_meta() classifies a predicate as AlwaysFalse (partition can
// be pruned), AlwaysTrue (every row qualifies: the partition is
// fully-matching) or Maybe.
//
// Internally a predicate is mapped to the set of SQL truth values
// {TRUE, FALSE, NULL} it may produce on some row of the partition. Boolean
// connectives are lifted pointwise over these sets, which keeps NOT sound in
// the presence of NULLs (NOT NULL is still NULL, so negating "never TRUE"
// does not give "always TRUE").

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "prunedb/expr.hpp"
#include "prunedb/partition_store.hpp"

namespace prunedb {

/// Range of values an expression may take. An absent bound is unbounded.
/// `only_null` means no non-null value is possible at all.
struct Interval {
  std::optional<Value> lo;
  std::optional<Value> hi;
  bool may_be_null = false;
  bool only_null = false;

  static Interval point(Value v) {
    if (v.is_null()) return nulls();
    Interval i;
    i.lo = v;
    i.hi = std::move(v);
    return i;
  }
  static Interval nulls() {
    Interval i;
    i.may_be_null = i.only_null = true;
    return i;
  }
  static Interval unbounded(bool may_be_null) {
    Interval i;
    i.may_be_null = may_be_null;
    return i;
  }
  static Interval of(Value lo, Value hi, bool may_be_null = false) {
    Interval i;
    i.lo = std::move(lo);
    i.hi = std::move(hi);
    i.may_be_null = may_be_null;
    return i;
  }

  bool bounded() const { return lo.has_value() && hi.has_value(); }

  /// True if `v` is a possible value (NULL is possible iff may_be_null).
  bool contains(const Value& v) const {
    if (v.is_null()) return may_be_null;
    if (only_null) return false;
    if (lo && compare(v, *lo) < 0) return false;
    if (hi && compare(v, *hi) > 0) return false;
    return true;
  }
};

inline Interval hull(const Interval& a, const Interval& b) {
  if (a.only_null) {
    Interval r = b;
    r.may_be_null = true;
    return r;
  }
  if (b.only_null) {
    Interval r = a;
    r.may_be_null = true;
    return r;
  }
  Interval r;
  if (a.lo && b.lo) r.lo = min_value(*a.lo, *b.lo);
  if (a.hi && b.hi) r.hi = max_value(*a.hi, *b.hi);
  r.may_be_null = a.may_be_null || b.may_be_null;
  return r;
}

enum class TriState : std::uint8_t { AlwaysFalse, Maybe, AlwaysTrue };

inline std::string_view tristate_name(TriState t) {
  switch (t) {
    case TriState::AlwaysFalse: return "AlwaysFalse";
    case TriState::Maybe: return "Maybe";
    case TriState::AlwaysTrue: return "AlwaysTrue";
  }
  return "?";
}

// Kleene connectives on the classification itself.
inline TriState tri_and(TriState a, TriState b) {
  if (a == TriState::AlwaysFalse || b == TriState::AlwaysFalse) return TriState::AlwaysFalse;
  if (a == TriState::AlwaysTrue && b == TriState::AlwaysTrue) return TriState::AlwaysTrue;
  return TriState::Maybe;
}
inline TriState tri_or(TriState a, TriState b) {
  if (a == TriState::AlwaysTrue || b == TriState::AlwaysTrue) return TriState::AlwaysTrue;
  if (a == TriState::AlwaysFalse && b == TriState::AlwaysFalse) return TriState::AlwaysFalse;
  return TriState::Maybe;
}
inline TriState tri_not(TriState a) {
  if (a == TriState::AlwaysTrue) return TriState::AlwaysFalse;
  if (a == TriState::AlwaysFalse) return TriState::AlwaysTrue;
  return TriState::Maybe;
}

/// Subset of {TRUE, FALSE, NULL}: the truth values a predicate can produce on
/// the rows of a partition.
struct Outcomes {
  static constexpr std::uint8_t kTrue = 1, kFalse = 2, kNull = 4;
  std::uint8_t bits = 0;

  bool can_true() const { return bits & kTrue; }
  bool can_false() const { return bits & kFalse; }
  bool can_null() const { return bits & kNull; }

  static Outcomes of(bool t, bool f, bool n) {
    return {static_cast<std::uint8_t>((t ? kTrue : 0) | (f ? kFalse : 0) | (n ? kNull : 0))};
  }

  TriState classify() const {
    if (!can_true()) return TriState::AlwaysFalse;
    if (bits == kTrue) return TriState::AlwaysTrue;
    return TriState::Maybe;
  }
};

namespace detail {

// Lifts a binary three-valued connective over two outcome sets.
template <class Op>
Outcomes lift(Outcomes a, Outcomes b, Op op) {
  std::uint8_t out = 0;
  for (std::uint8_t x : {Outcomes::kTrue, Outcomes::kFalse, Outcomes::kNull}) {
    if (!(a.bits & x)) continue;
    for (std::uint8_t y : {Outcomes::kTrue, Outcomes::kFalse, Outcomes::kNull}) {
      if (b.bits & y) out |= op(x, y);
    }
  }
  return {out};
}

inline std::uint8_t and3(std::uint8_t x, std::uint8_t y) {
  if (x == Outcomes::kFalse || y == Outcomes::kFalse) return Outcomes::kFalse;
  if (x == Outcomes::kNull || y == Outcomes::kNull) return Outcomes::kNull;
  return Outcomes::kTrue;
}
inline std::uint8_t or3(std::uint8_t x, std::uint8_t y) {
  if (x == Outcomes::kTrue || y == Outcomes::kTrue) return Outcomes::kTrue;
  if (x == Outcomes::kNull || y == Outcomes::kNull) return Outcomes::kNull;
  return Outcomes::kFalse;
}

inline Outcomes not_outcomes(Outcomes a) {
  return Outcomes::of(a.can_false(), a.can_true(), a.can_null());
}

}  // namespace detail

/// Smallest string greater than every string with prefix `p`, or nullopt if
/// no such string exists (p empty or all 0xFF bytes).
inline std::optional<std::string> prefix_successor(std::string p) {
  while (!p.empty() && static_cast<unsigned char>(p.back()) == 0xFF) p.pop_back();
  if (p.empty()) return std::nullopt;
  p.back() = static_cast<char>(static_cast<unsigned char>(p.back()) + 1);
  return p;
}

/// May a string in [lo, hi] start with `prefix`? Two-sided test:
/// hi >= prefix and lo < successor(prefix).
inline bool range_may_have_prefix(const Interval& i, const std::string& prefix) {
  if (i.only_null) return false;
  if (prefix.empty()) return true;
  if (i.hi && i.hi->as_string() < prefix) return false;
  if (auto succ = prefix_successor(prefix); succ && i.lo && !(i.lo->as_string() < *succ)) return false;
  return true;
}

/// Does every string in [lo, hi] start with `prefix`? Strings sharing a
/// prefix form a contiguous range, so checking both endpoints suffices.
inline bool range_all_have_prefix(const Interval& i, const std::string& prefix) {
  if (prefix.empty()) return true;
  if (!i.bounded()) return false;
  auto starts = [&](const std::string& s) { return s.compare(0, prefix.size(), prefix) == 0 && s.size() >= prefix.size(); };
  return starts(i.lo->as_string()) && starts(i.hi->as_string());
}

struct LikeShape {
  std::string prefix;  // literal bytes before the first wildcard
  bool exact = false;  // no wildcard at all
  bool simple = false; // prefix followed only by '%' characters
};

inline LikeShape analyze_like(const std::string& pattern) {
  LikeShape s;
  auto pos = pattern.find_first_of("%_");
  if (pos == std::string::npos) {
    s.prefix = pattern;
    s.exact = true;
    return s;
  }
  s.prefix = pattern.substr(0, pos);
  s.simple = pattern.find_first_not_of('%', pos) == std::string::npos;
  return s;
}

/// Replaces predicates by weaker ones that are still usable for pruning.
/// The result is implied by the input (it admits a superset of rows) and is
/// only ever evaluated against metadata, never substituted for row filtering.
///   x LIKE 'p%...'  ->  STARTSWITH(x, 'p')
///   x LIKE 'abc'    ->  x = 'abc'
///   x LIKE '%...'   ->  TRUE (no pruning power)
/// Widening descends through AND/OR only; anything under NOT is left alone
/// since weakening a negated operand would strengthen the whole.
inline ExprPtr widen_rewrite(const ExprPtr& p) {
  switch (p->kind) {
    case ExprKind::Like: {
      LikeShape s = analyze_like(p->text);
      if (s.exact) return ex::eq(p->children[0], ex::lit(Value(s.prefix)));
      if (s.prefix.empty()) return ex::truth();
      return ex::starts_with(p->children[0], s.prefix);
    }
    case ExprKind::And:
    case ExprKind::Or: {
      std::vector<ExprPtr> kids;
      bool changed = false;
      for (const auto& c : p->children) {
        kids.push_back(widen_rewrite(c));
        changed |= kids.back() != c;
      }
      if (!changed) return p;
      return ex::junction(p->kind, std::move(kids));
    }
    default: return p;
  }
}

/// NOT pushed through AND/OR/NOT and comparisons (De Morgan). Equivalent to
/// NOT p under three-valued logic.
inline ExprPtr negate(const ExprPtr& p) {
  switch (p->kind) {
    case ExprKind::And:
    case ExprKind::Or: {
      std::vector<ExprPtr> kids;
      for (const auto& c : p->children) kids.push_back(negate(c));
      return ex::junction(p->kind == ExprKind::And ? ExprKind::Or : ExprKind::And, std::move(kids));
    }
    case ExprKind::Not: return p->children[0];
    case ExprKind::Cmp: return ex::cmp(negate(p->cmp), p->children[0], p->children[1]);
    case ExprKind::Literal:
      if (p->value.type() == Type::Bool) return ex::lit(Value(!p->value.as_bool()));
      return p;
    default: return ex::not_(p);
  }
}

namespace detail {

inline bool int_endpoint_op(ArithOp op, std::int64_t a, std::int64_t b, std::int64_t& out) {
  switch (op) {
    case ArithOp::Add: return !__builtin_add_overflow(a, b, &out);
    case ArithOp::Sub: return !__builtin_sub_overflow(a, b, &out);
    case ArithOp::Mul: return !__builtin_mul_overflow(a, b, &out);
    case ArithOp::Div: return false;
  }
  return false;
}

inline double double_endpoint_op(ArithOp op, double a, double b) {
  switch (op) {
    case ArithOp::Add: return a + b;
    case ArithOp::Sub: return a - b;
    case ArithOp::Mul: return a * b;
    case ArithOp::Div: return a / b;
  }
  return std::nan("");
}

// Interval arithmetic. IEEE rounding is monotone, so bounds computed with the
// same operations as row evaluation stay sound.
inline Interval arith_interval(ArithOp op, const Interval& a, const Interval& b) {
  if (a.only_null || b.only_null) return Interval::nulls();
  bool may_null = a.may_be_null || b.may_be_null;
  if (!a.bounded() || !b.bounded()) return Interval::unbounded(may_null || op == ArithOp::Div);

  if (op == ArithOp::Div) {
    bool zero_in_divisor = compare(*b.lo, Value(0)) <= 0 && compare(*b.hi, Value(0)) >= 0;
    if (zero_in_divisor) return Interval::unbounded(true);
  }

  // For a monotone op in each argument the extremes are attained at endpoint
  // combinations; Sub pairs lo with hi.
  const Value* xs[2] = {&*a.lo, &*a.hi};
  const Value* ys[2] = {&*b.lo, &*b.hi};
  bool all_int = a.lo->type() == Type::Int64 && a.hi->type() == Type::Int64 &&
                 b.lo->type() == Type::Int64 && b.hi->type() == Type::Int64 && op != ArithOp::Div;
  if (all_int) {
    std::int64_t lo = 0, hi = 0;
    bool first = true;
    for (auto* x : xs) {
      for (auto* y : ys) {
        std::int64_t r = 0;
        if (!int_endpoint_op(op, x->as_int(), y->as_int(), r)) return Interval::unbounded(may_null);
        if (first || r < lo) lo = r;
        if (first || r > hi) hi = r;
        first = false;
      }
    }
    return Interval::of(Value(lo), Value(hi), may_null);
  }
  double lo = 0, hi = 0;
  bool first = true;
  for (auto* x : xs) {
    for (auto* y : ys) {
      double xv = x->to_double(), yv = y->to_double();
      if (!std::isfinite(xv) || !std::isfinite(yv)) return Interval::unbounded(may_null);
      double r = double_endpoint_op(op, xv, yv);
      if (std::isnan(r)) return Interval::unbounded(may_null);
      if (first || r < lo) lo = r;
      if (first || r > hi) hi = r;
      first = false;
    }
  }
  return Interval::of(Value(lo), Value(hi), may_null);
}

// Is there a in A, b in B with a `op` b? (Both intervals hold values.)
inline bool exists_cmp(CmpOp op, const Interval& a, const Interval& b) {
  switch (op) {
    case CmpOp::Lt: return !a.lo || !b.hi || compare(*a.lo, *b.hi) < 0;
    case CmpOp::Le: return !a.lo || !b.hi || compare(*a.lo, *b.hi) <= 0;
    case CmpOp::Gt: return exists_cmp(CmpOp::Lt, b, a);
    case CmpOp::Ge: return exists_cmp(CmpOp::Le, b, a);
    case CmpOp::Eq: return exists_cmp(CmpOp::Le, a, b) && exists_cmp(CmpOp::Le, b, a);
    case CmpOp::Ne: {
      bool a_point = a.bounded() && compare(*a.lo, *a.hi) == 0;
      bool b_point = b.bounded() && compare(*b.lo, *b.hi) == 0;
      return !(a_point && b_point && compare(*a.lo, *b.lo) == 0);
    }
  }
  return true;
}

inline Outcomes cmp_outcomes(CmpOp op, const Interval& a, const Interval& b) {
  if (a.only_null || b.only_null) return Outcomes::of(false, false, true);
  return Outcomes::of(exists_cmp(op, a, b), exists_cmp(negate(op), a, b),
                      a.may_be_null || b.may_be_null);
}

}  // namespace detail

template <class StatsLookup>
Outcomes meta_outcomes(const Expr& e, const StatsLookup& stats);

/// Sound over-approximation of the values `e` can take on any row consistent
/// with the given per-column stats. `stats(name)` returns a ColumnStats
/// pointer, or nullptr when the column has no metadata (an error).
template <class StatsLookup>
Interval derive_interval(const Expr& e, const StatsLookup& stats) {
  switch (e.kind) {
    case ExprKind::Literal: return Interval::point(e.value);
    case ExprKind::Column: {
      const ColumnStats* s = stats(e.text);
      if (!s) throw BindError("no metadata for column '" + e.text + "'");
      if (s->all_null()) return Interval::nulls();
      return Interval::of(*s->min, *s->max, s->has_nulls());
    }
    case ExprKind::Arith:
      return detail::arith_interval(e.arith, derive_interval(*e.children[0], stats),
                                    derive_interval(*e.children[1], stats));
    case ExprKind::If: {
      Outcomes cond = meta_outcomes(*e.children[0], stats);
      if (cond.bits == Outcomes::kTrue) return derive_interval(*e.children[1], stats);
      if (!cond.can_true()) return derive_interval(*e.children[2], stats);
      return hull(derive_interval(*e.children[1], stats), derive_interval(*e.children[2], stats));
    }
    default:
      throw TypeError("derive_interval needs a scalar expression, got " + to_string(e));
  }
}

/// Possible truth values of a boolean expression over a partition.
template <class StatsLookup>
Outcomes meta_outcomes(const Expr& e, const StatsLookup& stats) {
  switch (e.kind) {
    case ExprKind::Literal:
      if (e.value.is_null()) return Outcomes::of(false, false, true);
      if (e.value.type() != Type::Bool) throw TypeError("non-boolean predicate " + to_string(e));
      return Outcomes::of(e.value.as_bool(), !e.value.as_bool(), false);
    case ExprKind::Column: {
      Interval i = derive_interval(e, stats);
      if (i.only_null) return Outcomes::of(false, false, true);
      if (i.lo->type() != Type::Bool) throw TypeError("non-boolean predicate " + to_string(e));
      return Outcomes::of(i.hi->as_bool(), !i.lo->as_bool(), i.may_be_null);
    }
    case ExprKind::Cmp:
      return detail::cmp_outcomes(e.cmp, derive_interval(*e.children[0], stats),
                                  derive_interval(*e.children[1], stats));
    case ExprKind::And:
    case ExprKind::Or: {
      Outcomes acc = meta_outcomes(*e.children[0], stats);
      for (std::size_t i = 1; i < e.children.size(); ++i) {
        Outcomes c = meta_outcomes(*e.children[i], stats);
        acc = e.kind == ExprKind::And ? detail::lift(acc, c, detail::and3)
                                      : detail::lift(acc, c, detail::or3);
      }
      return acc;
    }
    case ExprKind::Not: return detail::not_outcomes(meta_outcomes(*e.children[0], stats));
    case ExprKind::If: {
      Outcomes cond = meta_outcomes(*e.children[0], stats);
      Outcomes out;
      if (cond.can_true()) out.bits |= meta_outcomes(*e.children[1], stats).bits;
      if (cond.can_false() || cond.can_null()) out.bits |= meta_outcomes(*e.children[2], stats).bits;
      return out;
    }
    case ExprKind::Like: {
      LikeShape shape = analyze_like(e.text);
      Interval i = derive_interval(*e.children[0], stats);
      if (i.only_null) return Outcomes::of(false, false, true);
      if (shape.exact) return detail::cmp_outcomes(CmpOp::Eq, i, Interval::point(Value(shape.prefix)));
      // TRUE is possible only if the widened predicate can be TRUE.
      ExprPtr self = ex::like(e.children[0], e.text);
      bool can_true = meta_outcomes(*widen_rewrite(self), stats).can_true();
      bool can_false = !shape.simple || !range_all_have_prefix(i, shape.prefix);
      return Outcomes::of(can_true, can_false, i.may_be_null);
    }
    case ExprKind::StartsWith: {
      Interval i = derive_interval(*e.children[0], stats);
      if (i.only_null) return Outcomes::of(false, false, true);
      return Outcomes::of(range_may_have_prefix(i, e.text), !range_all_have_prefix(i, e.text),
                          i.may_be_null);
    }
    case ExprKind::IsNull: {
      Interval i = derive_interval(*e.children[0], stats);
      return Outcomes::of(i.may_be_null, !i.only_null, false);
    }
    case ExprKind::InList: {
      Interval i = derive_interval(*e.children[0], stats);
      if (i.only_null) return Outcomes::of(false, false, true);
      Outcomes acc = Outcomes::of(false, true, i.may_be_null);
      for (const auto& v : e.list) {
        acc = detail::lift(acc, detail::cmp_outcomes(CmpOp::Eq, i, Interval::point(v)), detail::or3);
      }
      return acc;
    }
    case ExprKind::Arith: throw TypeError("non-boolean predicate " + to_string(e));
  }
  throw TypeError("unknown expression kind");
}

/// Partition-level classification of a predicate. AlwaysFalse: no row can
/// qualify. AlwaysTrue: every row qualifies (NULL results rule this out).
template <class StatsLookup>
TriState eval_meta(const Expr& predicate, const StatsLookup& stats) {
  return meta_outcomes(predicate, stats).classify();
}

/// Stats lookup over one partition of a table. Column names may be qualified
/// with `qualifier.`; unqualified names are accepted as well.
class PartitionStats {
 public:
  PartitionStats(const Table& table, const MicroPartition& part, std::string qualifier = {})
      : table_(&table), part_(&part), qualifier_(std::move(qualifier)) {}

  const ColumnStats* operator()(const std::string& name) const {
    std::string_view n = name;
    if (!qualifier_.empty() && n.size() > qualifier_.size() && n.substr(0, qualifier_.size()) == qualifier_ &&
        n[qualifier_.size()] == '.')
      n.remove_prefix(qualifier_.size() + 1);
    auto idx = table_->schema().index_of(n);
    if (!idx) return nullptr;
    return &part_->stats(*idx);
  }

 private:
  const Table* table_;
  const MicroPartition* part_;
  std::string qualifier_;
};

}  // namespace prunedb
