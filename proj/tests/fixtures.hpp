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

// Shared test data: the four-partition animal tracking table, hand-rolled
// random table and query generators, and the result-equivalence oracle.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prunedb/prunedb.hpp"

namespace testkit {

using namespace prunedb;

// ---------------------------------------------------------------------------
// The animal tracking table: species and height s, three rows per partition.

inline Table tracking_table(const std::string& name = "tracking_data") {
  TableSchema schema({{"species", Type::Utf8}, {"s", Type::Int64}});
  auto part = [](PartitionId id, std::vector<std::pair<std::string, std::int64_t>> rows) {
    std::vector<std::vector<Value>> cols(2);
    for (auto& [sp, s] : rows) {
      cols[0].push_back(Value(sp));
      cols[1].push_back(Value(s));
    }
    return MicroPartition(id, std::move(cols));
  };
  std::vector<MicroPartition> parts;
  parts.push_back(part(1, {{"Snow Vole", 7}, {"Brown Bear", 133}, {"Gray Wolf", 82}}));
  parts.push_back(part(2, {{"Lynx", 71}, {"Red Fox", 40}, {"Alpine Bat", 6}}));
  parts.push_back(part(3, {{"Alpine Ibex", 101}, {"Alpine Goat", 76}, {"Alpine Sheep", 83}}));
  parts.push_back(part(4, {{"Europ. Mole", 4}, {"Polecat", 16}, {"Alpine Ibex", 97}}));
  return Table(name, schema, std::move(parts));
}

inline Catalog tracking_catalog() {
  Catalog c;
  c.add(tracking_table());
  return c;
}

/// species LIKE 'Alpine%' AND s >= 50
inline ExprPtr tracking_predicate() {
  return ex::and_({ex::like(ex::col("species"), "Alpine%"), ex::ge(ex::col("s"), ex::lit(Value(50)))});
}

// ---------------------------------------------------------------------------
// Random generation.

using Rng = std::mt19937_64;

inline std::uint64_t pick(Rng& rng, std::uint64_t n) { return bounded_random(rng, n); }
inline std::int64_t between(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(pick(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}
inline bool chance(Rng& rng, int percent) { return static_cast<int>(pick(rng, 100)) < percent; }

template <class T>
const T& one_of(Rng& rng, const std::vector<T>& v) {
  return v[pick(rng, v.size())];
}

inline const std::vector<std::string>& words() {
  static const std::vector<std::string> w = {"Alpine Ibex", "Alpine Goat", "Alpine Bat", "Brown Bear", "Lynx",
                                             "Red Fox",     "Snow Vole",   "Polecat",    "alpine",     "",
                                             "Gray Wolf",   "Zebra"};
  return w;
}

struct TableShape {
  std::size_t max_partitions = 12;
  std::size_t max_rows = 30;
  int null_percent = 10;
};

/// Random rows for `schema`. Int64 columns draw from [-20, 20] (the second
/// int column from [0, 5] to create groups), Float64 from halves in
/// [-10, 10] with rare NaN and -0.0, Utf8 from a fixed word list.
inline std::vector<Row> random_rows(Rng& rng, const TableSchema& schema, std::size_t n, int null_percent) {
  std::vector<Row> rows(n);
  int int_cols = 0;
  std::vector<int> int_rank(schema.size(), 0);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].type == Type::Int64) int_rank[c] = int_cols++;
  }
  for (auto& row : rows) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (chance(rng, null_percent)) {
        row.push_back(Value::null());
        continue;
      }
      switch (schema[c].type) {
        case Type::Int64: row.push_back(Value(int_rank[c] == 1 ? between(rng, 0, 5) : between(rng, -20, 20))); break;
        case Type::Float64: {
          int r = static_cast<int>(pick(rng, 100));
          if (r == 0) row.push_back(Value(std::nan("")));
          else if (r == 1) row.push_back(Value(-0.0));
          else row.push_back(Value(static_cast<double>(between(rng, -20, 20)) / 2.0));
          break;
        }
        case Type::Utf8: row.push_back(Value(one_of(rng, words()))); break;
        case Type::Bool: row.push_back(Value(chance(rng, 50))); break;
        case Type::Null: row.push_back(Value::null()); break;
      }
    }
  }
  return rows;
}

inline Table random_table(Rng& rng, const std::string& name, const TableSchema& schema, const TableShape& shape) {
  std::size_t parts = pick(rng, shape.max_partitions + 1);
  std::size_t per = 1 + pick(rng, shape.max_rows);
  std::size_t n = parts * per;
  if (n > 0 && chance(rng, 30)) n -= pick(rng, per);  // ragged last partition
  int nulls = chance(rng, 30) ? 0 : shape.null_percent;
  std::vector<Row> rows = random_rows(rng, schema, n, nulls);
  std::vector<std::string> sort;
  if (chance(rng, 50)) sort.push_back(schema[pick(rng, schema.size())].name);
  if (n == 0) return Table(name, schema, {});
  return build_table(name, schema, std::move(rows), per, sort);
}

inline TableSchema schema_t1() {
  return TableSchema({{"a", Type::Int64}, {"b", Type::Int64}, {"c", Type::Float64}, {"s", Type::Utf8}});
}
inline TableSchema schema_t2() {
  return TableSchema({{"k", Type::Int64}, {"v", Type::Int64}, {"w", Type::Utf8}});
}

inline Catalog random_catalog(Rng& rng, const TableShape& shape = {}) {
  Catalog c;
  c.add(random_table(rng, "t1", schema_t1(), shape));
  TableShape small = shape;
  small.max_partitions = std::min<std::size_t>(shape.max_partitions, 8);
  small.max_rows = std::min<std::size_t>(shape.max_rows, 20);
  c.add(random_table(rng, "t2", schema_t2(), small));
  return c;
}

/// Random well-typed predicate over the named columns of one table. `q` is
/// the qualifier to prepend ("" for none).
struct ColumnsOf {
  std::string q;
  std::vector<std::string> ints, floats, strings;
  std::string name(const std::string& c) const { return q.empty() ? c : q + "." + c; }
};

inline ColumnsOf cols_t1(const std::string& q) { return {q, {"a", "b"}, {"c"}, {"s"}}; }
inline ColumnsOf cols_t2(const std::string& q) { return {q, {"k", "v"}, {}, {"w"}}; }

inline std::string random_numeric(Rng& rng, const ColumnsOf& t) {
  std::string base = t.name(one_of(rng, t.ints));
  if (!t.floats.empty() && chance(rng, 25)) base = t.name(t.floats[0]);
  switch (pick(rng, 7)) {
    case 0: return base + " * 2 + " + std::to_string(between(rng, -3, 3));
    case 1: return base + " - " + t.name(one_of(rng, t.ints));
    case 2: return "IF(" + t.name(t.ints.back()) + " > 2, " + base + ", " + base + " * 10)";
    case 3: return base + " / " + t.name(t.ints.back());
    default: return base;
  }
}

inline std::string random_leaf(Rng& rng, const ColumnsOf& t) {
  static const std::vector<std::string> ops = {"<", "<=", "=", "<>", ">=", ">"};
  switch (pick(rng, 12)) {
    case 0:
    case 1:
    case 2: return t.name(one_of(rng, t.ints)) + " " + one_of(rng, ops) + " " + std::to_string(between(rng, -22, 22));
    case 3: return random_numeric(rng, t) + " " + one_of(rng, ops) + " " + std::to_string(between(rng, -15, 15));
    case 4: {
      static const std::vector<std::string> pats = {"Alpine%", "%o%", "L_nx", "%", "A%e%", "Red Fox", "_"};
      return t.name(t.strings[0]) + (chance(rng, 20) ? " NOT" : "") + " LIKE '" + one_of(rng, pats) + "'";
    }
    case 5: {
      static const std::vector<std::string> pre = {"Al", "B", "", "Zz", "Alpine I"};
      return "STARTSWITH(" + t.name(t.strings[0]) + ", '" + one_of(rng, pre) + "')";
    }
    case 6: return t.name(t.strings[0]) + " " + one_of(rng, ops) + " '" + one_of(rng, words()) + "'";
    case 7: return t.name(one_of(rng, t.ints)) + (chance(rng, 50) ? " IS NULL" : " IS NOT NULL");
    case 8:
      return t.name(one_of(rng, t.ints)) + (chance(rng, 20) ? " NOT" : "") + " IN (" +
             std::to_string(between(rng, -5, 5)) + ", " + std::to_string(between(rng, -5, 5)) + ", 3)";
    case 9:
      if (!t.floats.empty()) return t.name(t.floats[0]) + " " + one_of(rng, ops) + " " + std::to_string(between(rng, -10, 10)) + ".5";
      return t.name(t.ints[0]) + " < " + t.name(t.ints[1]);
    case 10: return t.name(t.ints[0]) + " " + one_of(rng, ops) + " " + t.name(t.ints[1]);
    default: return chance(rng, 50) ? "TRUE" : "FALSE";
  }
}

inline std::string random_predicate(Rng& rng, const ColumnsOf& t, int depth = 2) {
  if (depth == 0 || chance(rng, 45)) return random_leaf(rng, t);
  switch (pick(rng, 4)) {
    case 0: return "NOT (" + random_predicate(rng, t, depth - 1) + ")";
    case 1: return "(" + random_predicate(rng, t, depth - 1) + " OR " + random_predicate(rng, t, depth - 1) + ")";
    default: return "(" + random_predicate(rng, t, depth - 1) + " AND " + random_predicate(rng, t, depth - 1) + ")";
  }
}

inline std::string limit_clause(Rng& rng, bool allow_offset = true) {
  std::string s = " LIMIT " + std::to_string(between(rng, 0, 12));
  if (allow_offset && chance(rng, 25)) s += " OFFSET " + std::to_string(between(rng, 1, 4));
  return s;
}

inline std::string order_clause(Rng& rng, const ColumnsOf& t) {
  std::string e;
  switch (pick(rng, 5)) {
    case 0: e = t.name(t.strings[0]); break;
    case 1: e = random_numeric(rng, t); break;
    case 2: e = t.name(t.floats.empty() ? t.ints[1] : t.floats[0]); break;
    default: e = t.name(one_of(rng, t.ints));
  }
  return " ORDER BY " + e + (chance(rng, 60) ? " DESC" : " ASC");
}

/// One random query from the supported grammar over tables t1 and t2.
inline std::string random_query(Rng& rng) {
  ColumnsOf t1 = cols_t1(""), t2 = cols_t2("");
  int kind = static_cast<int>(pick(rng, 100));
  if (kind < 25) {
    return "SELECT * FROM t1 WHERE " + random_predicate(rng, t1);
  }
  if (kind < 40) {
    return "SELECT * FROM t1" + (chance(rng, 80) ? " WHERE " + random_predicate(rng, t1) : std::string()) +
           limit_clause(rng);
  }
  if (kind < 60) {
    std::string q = "SELECT * FROM t1" + (chance(rng, 70) ? " WHERE " + random_predicate(rng, t1) : std::string()) +
                    order_clause(rng, t1);
    return q + (chance(rng, 90) ? limit_clause(rng) : std::string());
  }
  if (kind < 72) {
    ColumnsOf a = cols_t1("x"), b = cols_t2("y");
    std::string q = std::string("SELECT * FROM t1 x ") + (chance(rng, 35) ? "LEFT JOIN" : "JOIN") + " t2 y ON x." +
                    (chance(rng, 70) ? "a" : "b") + " = y.k";
    std::vector<std::string> conj;
    if (chance(rng, 60)) conj.push_back(random_predicate(rng, a, 1));
    if (chance(rng, 60)) conj.push_back(random_predicate(rng, b, 1));
    for (std::size_t i = 0; i < conj.size(); ++i) q += (i ? " AND " : " WHERE ") + conj[i];
    if (chance(rng, 50)) q += order_clause(rng, chance(rng, 50) ? a : b) + limit_clause(rng);
    else if (chance(rng, 30)) q += limit_clause(rng);
    return q;
  }
  if (kind < 80) {
    // Projection with computed columns.
    std::string q = "SELECT a + b AS ab, s, c FROM t1 WHERE " + random_predicate(rng, t1);
    if (chance(rng, 50)) q += " ORDER BY ab" + std::string(chance(rng, 50) ? " DESC" : "") + limit_clause(rng);
    return q;
  }
  if (kind < 93) {
    std::string keys = chance(rng, 70) ? "b" : "b, s";
    std::string q = "SELECT " + keys + ", COUNT(*) AS n, SUM(a) AS sa, MIN(s) AS ms, MAX(c) AS mc, COUNT(c) AS nc FROM t1";
    if (chance(rng, 70)) q += " WHERE " + random_predicate(rng, t1);
    q += " GROUP BY " + keys;
    if (chance(rng, 60)) q += " ORDER BY b" + std::string(chance(rng, 50) ? " DESC" : "") + limit_clause(rng, false);
    else if (chance(rng, 30)) q += " ORDER BY n DESC" + limit_clause(rng, false);
    return q;
  }
  if (kind < 97) {
    return "SELECT COUNT(*), SUM(a), MIN(c), MAX(s), SUM(c) FROM t1 WHERE " + random_predicate(rng, t1);
  }
  ColumnsOf a = cols_t1("x"), b = cols_t2("y");
  return "SELECT y.w, COUNT(*) AS n, SUM(x.a) AS sa FROM t1 x JOIN t2 y ON x.a = y.k WHERE " +
         random_predicate(rng, a, 1) + " GROUP BY y.w ORDER BY y.w" + limit_clause(rng, false);
}

// ---------------------------------------------------------------------------
// Result comparison.

inline bool rows_equal(const Row& a, const Row& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] == b[i])) return false;
  }
  return true;
}

inline bool row_less(const Row& a, const Row& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i].type() != b[i].type()) return a[i].type() < b[i].type();
    auto o = storage_order(a[i], b[i]);
    if (o != 0) return o < 0;
  }
  return a.size() < b.size();
}

inline std::vector<Row> sorted_rows(std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

inline bool same_multiset(const std::vector<Row>& a, const std::vector<Row>& b) {
  if (a.size() != b.size()) return false;
  auto x = sorted_rows(a), y = sorted_rows(b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!rows_equal(x[i], y[i])) return false;
  }
  return true;
}

/// Every row of `sub` appears in `super`, respecting multiplicity.
inline bool sub_multiset(const std::vector<Row>& sub, const std::vector<Row>& super) {
  auto x = sorted_rows(sub), y = sorted_rows(super);
  std::size_t j = 0;
  for (const auto& r : x) {
    while (j < y.size() && row_less(y[j], r)) ++j;
    if (j == y.size() || !rows_equal(y[j], r)) return false;
    ++j;
  }
  return true;
}

inline bool contains_kind(const Plan& p, PlanKind k) {
  if (p.kind == k) return true;
  for (const auto& c : p.children) {
    if (contains_kind(*c, k)) return true;
  }
  return false;
}

/// The plan with every LIMIT that has no TopK below it removed.
inline PlanPtr strip_unordered_limits(const PlanPtr& p) {
  if (p->kind == PlanKind::Limit && !contains_kind(*p->children[0], PlanKind::TopK))
    return strip_unordered_limits(p->children[0]);
  Plan copy = *p;
  for (auto& c : copy.children) c = strip_unordered_limits(c);
  return std::make_shared<const Plan>(std::move(copy));
}

struct Verdict {
  bool ok = true;
  std::string why;
};

/// Equivalence of the pruning executor with the oracle: an unordered LIMIT
/// must return the oracle's cardinality with every row qualifying; anything
/// else must match exactly as a multiset (top-k ties are broken by row
/// origin in both executors, so ordered results match row for row).
inline Verdict equivalent(const PlanPtr& plan, const Catalog& catalog, const ResultSet& got) {
  NaiveResult want = naive_execute(*plan, catalog);
  bool unordered_limit = plan_to_json(*strip_unordered_limits(plan)) != plan_to_json(*plan);
  if (unordered_limit) {
    if (got.rows.size() != want.rows.size())
      return {false, "LIMIT cardinality " + std::to_string(got.rows.size()) + " vs " + std::to_string(want.rows.size())};
    NaiveResult all = naive_execute(*strip_unordered_limits(plan), catalog);
    if (!sub_multiset(got.rows, all.rows)) return {false, "LIMIT returned a non-qualifying row"};
    return {};
  }
  if (contains_kind(*plan, PlanKind::TopK)) {
    if (got.rows.size() != want.rows.size()) return {false, "top-k cardinality differs"};
    for (std::size_t i = 0; i < got.rows.size(); ++i) {
      if (!rows_equal(got.rows[i], want.rows[i])) return {false, "top-k row " + std::to_string(i) + " differs"};
    }
    return {};
  }
  if (!same_multiset(got.rows, want.rows))
    return {false, "multiset differs (" + std::to_string(got.rows.size()) + " vs " + std::to_string(want.rows.size()) + " rows)"};
  return {};
}

/// Per-scan attribution sums to the total and names every partition once.
inline Verdict conserved(const QueryStats& q, const Catalog& catalog) {
  for (const auto& s : q.scans) {
    const Table& t = catalog.at(s.table);
    if (s.partitions_total != t.partition_count()) return {false, "partitions_total mismatch on " + s.alias};
    if (s.pruned() + s.scanned != s.partitions_total) return {false, "pruned + scanned != total on " + s.alias};
    auto ids = t.partition_ids();
    if (s.attribution.size() != ids.size()) return {false, "attribution size mismatch on " + s.alias};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (s.attribution[i].first != ids[i]) return {false, "attribution order mismatch on " + s.alias};
      if (s.attribution[i].second == Attribution::Unset) return {false, "unattributed partition on " + s.alias};
    }
    ScanStats copy = s;
    copy.recount();
    if (copy.pruned_by_filter != s.pruned_by_filter || copy.pruned_by_limit != s.pruned_by_limit ||
        copy.pruned_by_join != s.pruned_by_join || copy.pruned_by_topk != s.pruned_by_topk || copy.scanned != s.scanned)
      return {false, "recount differs on " + s.alias};
  }
  return {};
}

inline ExecConfig only(Technique t) {
  ExecConfig c = ExecConfig::none();
  switch (t) {
    case Technique::Filter: c.filter_pruning = true; break;
    case Technique::Limit: c.limit_pruning = true; break;
    case Technique::Join: c.join_pruning = true; break;
    case Technique::TopK: c.topk_pruning = true; break;
  }
  return c;
}

}  // namespace testkit
