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

// Reference interpreter: reads every partition, joins with nested loops and
// sorts fully for top-k. Deliberately shares nothing with the pipelined
// executor beyond row-level expression evaluation.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "prunedb/plan.hpp"

namespace prunedb {

struct NaiveResult {
  std::vector<ColumnDef> schema;
  std::vector<Row> rows;
  std::vector<Origin> origins;
};

namespace naive_detail {

inline std::size_t find_column(const std::vector<ColumnDef>& schema, const std::string& name) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return i;
  }
  throw BindError("unknown column '" + name + "'");
}

inline Value eval(const Expr& e, const std::vector<ColumnDef>& schema, const Row& row) {
  return eval_row(e, [&](const std::string& n) { return row[find_column(schema, n)]; });
}

inline NaiveResult run(const Plan& p, const Catalog& catalog) {
  NaiveResult out;
  out.schema = output_schema(p, catalog);
  switch (p.kind) {
    case PlanKind::Scan: {
      const Table& t = catalog.at(p.table);
      for (const auto& part : t.partitions()) {
        for (std::size_t r = 0; r < part.row_count(); ++r) {
          out.rows.push_back(part.row(r));
          out.origins.push_back({part.id(), static_cast<std::uint32_t>(r)});
        }
      }
      return out;
    }
    case PlanKind::Filter: {
      NaiveResult in = run(*p.children[0], catalog);
      for (std::size_t i = 0; i < in.rows.size(); ++i) {
        Value v = eval(*p.predicate, in.schema, in.rows[i]);
        if (!v.is_null() && v.as_bool()) {
          out.rows.push_back(in.rows[i]);
          out.origins.push_back(in.origins[i]);
        }
      }
      return out;
    }
    case PlanKind::Project: {
      NaiveResult in = run(*p.children[0], catalog);
      for (std::size_t i = 0; i < in.rows.size(); ++i) {
        Row row;
        for (const auto& item : p.items) row.push_back(eval(*item.expr, in.schema, in.rows[i]));
        out.rows.push_back(std::move(row));
        out.origins.push_back(in.origins[i]);
      }
      return out;
    }
    case PlanKind::HashJoin: {
      NaiveResult build = run(*p.children[0], catalog);
      NaiveResult probe = run(*p.children[1], catalog);
      for (std::size_t b = 0; b < build.rows.size(); ++b) {
        bool matched = false;
        for (std::size_t q = 0; q < probe.rows.size(); ++q) {
          bool all = true;
          for (const auto& k : p.keys) {
            Value bv = eval(*k.build, build.schema, build.rows[b]);
            Value pv = eval(*k.probe, probe.schema, probe.rows[q]);
            if (bv.is_null() || pv.is_null() || compare(bv, pv) != 0) {
              all = false;
              break;
            }
          }
          if (!all) continue;
          matched = true;
          Row row = build.rows[b];
          row.insert(row.end(), probe.rows[q].begin(), probe.rows[q].end());
          Origin o = build.origins[b];
          o.insert(o.end(), probe.origins[q].begin(), probe.origins[q].end());
          out.rows.push_back(std::move(row));
          out.origins.push_back(std::move(o));
        }
        if (!matched && p.join_kind == JoinKind::LeftOuter) {
          Row row = build.rows[b];
          row.resize(row.size() + probe.schema.size());
          out.rows.push_back(std::move(row));
          out.origins.push_back(build.origins[b]);
        }
      }
      return out;
    }
    case PlanKind::GroupBy: {
      NaiveResult in = run(*p.children[0], catalog);
      // Group membership by key equality, first-seen order irrelevant: the
      // output is sorted by each group's smallest origin.
      std::vector<Row> keys;
      std::vector<std::vector<std::size_t>> members;
      for (std::size_t i = 0; i < in.rows.size(); ++i) {
        Row key;
        for (const auto& k : p.group_keys) key.push_back(eval(*k, in.schema, in.rows[i]));
        std::size_t g = 0;
        for (; g < keys.size(); ++g) {
          bool same = true;
          for (std::size_t c = 0; c < key.size() && same; ++c) same = storage_order(key[c], keys[g][c]) == 0;
          if (same) break;
        }
        if (g == keys.size()) {
          keys.push_back(key);
          members.emplace_back();
        }
        members[g].push_back(i);
      }
      if (p.group_keys.empty() && keys.empty()) {
        keys.emplace_back();
        members.emplace_back();
      }
      std::vector<std::pair<Origin, Row>> groups;
      for (std::size_t g = 0; g < keys.size(); ++g) {
        Row row = keys[g];
        Origin first;
        for (std::size_t m : members[g]) {
          if (first.empty() || in.origins[m] < first) first = in.origins[m];
        }
        for (std::size_t a = 0; a < p.aggregates.size(); ++a) {
          const Aggregate& agg = p.aggregates[a];
          Type out_type = out.schema[p.group_keys.size() + a].type;
          std::vector<std::pair<Origin, Value>> vals;
          for (std::size_t m : members[g]) {
            Value v = agg.arg ? eval(*agg.arg, in.schema, in.rows[m]) : Value(true);
            if (!v.is_null()) vals.emplace_back(in.origins[m], v);
          }
          std::sort(vals.begin(), vals.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
          switch (agg.func) {
            case AggFunc::Count:
            case AggFunc::CountStar: row.push_back(Value(static_cast<std::int64_t>(vals.size()))); break;
            case AggFunc::Sum: {
              if (vals.empty()) {
                row.push_back(Value::null());
                break;
              }
              bool as_float = out_type == Type::Float64 ||
                              std::any_of(vals.begin(), vals.end(), [](const auto& x) { return x.second.type() == Type::Float64; });
              if (as_float) {
                double s = 0;
                for (const auto& [o, v] : vals) s += v.to_double();
                row.push_back(Value(s));
              } else {
                __int128 s = 0;
                for (const auto& [o, v] : vals) s += v.as_int();
                if (s > std::numeric_limits<std::int64_t>::max() || s < std::numeric_limits<std::int64_t>::min())
                  throw ExecutionError("integer overflow in sum");
                row.push_back(Value(static_cast<std::int64_t>(s)));
              }
              break;
            }
            case AggFunc::Min:
            case AggFunc::Max: {
              if (vals.empty()) {
                row.push_back(Value::null());
                break;
              }
              Value best = vals[0].second;
              for (const auto& [o, v] : vals) {
                if (agg.func == AggFunc::Min ? less(v, best) : less(best, v)) best = v;
              }
              row.push_back(best);
              break;
            }
          }
        }
        groups.emplace_back(first, std::move(row));
      }
      std::sort(groups.begin(), groups.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      for (auto& [o, row] : groups) {
        out.rows.push_back(std::move(row));
        out.origins.push_back(std::move(o));
      }
      return out;
    }
    case PlanKind::TopK: {
      NaiveResult in = run(*p.children[0], catalog);
      std::vector<std::size_t> idx(in.rows.size());
      std::vector<Value> keys;
      for (std::size_t i = 0; i < in.rows.size(); ++i) {
        idx[i] = i;
        keys.push_back(eval(*p.order, in.schema, in.rows[i]));
      }
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const Value& x = keys[a];
        const Value& y = keys[b];
        if (x.is_null() != y.is_null()) return y.is_null();
        if (!x.is_null()) {
          auto o = compare(x, y);
          if (o != 0) return p.direction == Direction::Desc ? o > 0 : o < 0;
        }
        return in.origins[a] < in.origins[b];
      });
      for (std::size_t i = 0; i < idx.size() && i < p.k; ++i) {
        out.rows.push_back(in.rows[idx[i]]);
        out.origins.push_back(in.origins[idx[i]]);
      }
      return out;
    }
    case PlanKind::Limit: {
      NaiveResult in = run(*p.children[0], catalog);
      for (std::size_t i = p.offset; i < in.rows.size() && out.rows.size() < p.limit; ++i) {
        out.rows.push_back(in.rows[i]);
        out.origins.push_back(in.origins[i]);
      }
      return out;
    }
  }
  throw ExecutionError("unknown plan node");
}

}  // namespace naive_detail

/// Ground truth for the pruning executor: no pruning, no pipelining.
inline NaiveResult naive_execute(const Plan& plan, const Catalog& catalog) {
  validate(plan, catalog);
  return naive_detail::run(plan, catalog);
}

}  // namespace prunedb
