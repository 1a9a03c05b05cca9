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

// Operator trees shared by the planner, both executors and the CLI.
//
// Column naming: a Scan emits "alias.column" for every table column. Other
// operators keep their input names, except Project (item names) and GroupBy
// (key expression text followed by aggregate names). HashJoin emits the
// build columns followed by the probe columns.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "prunedb/expr_json.hpp"
#include "prunedb/partition_store.hpp"
#include "prunedb/topk.hpp"

namespace prunedb {

enum class PlanKind : std::uint8_t { Scan, Filter, Project, HashJoin, GroupBy, TopK, Limit };
enum class JoinKind : std::uint8_t { Inner, LeftOuter };
enum class AggFunc : std::uint8_t { Count, CountStar, Sum, Min, Max };

inline constexpr std::uint64_t kNoLimit = std::numeric_limits<std::uint64_t>::max();

struct ProjectItem {
  std::string name;
  ExprPtr expr;
};

struct JoinKey {
  ExprPtr build;
  ExprPtr probe;
};

struct Aggregate {
  AggFunc func = AggFunc::CountStar;
  ExprPtr arg;  // null for count(*)
  std::string name;
};

struct Plan;
using PlanPtr = std::shared_ptr<const Plan>;

struct Plan {
  PlanKind kind = PlanKind::Scan;
  std::string table, alias;           // Scan
  ExprPtr predicate;                  // Filter
  std::vector<ProjectItem> items;     // Project
  JoinKind join_kind = JoinKind::Inner;
  std::vector<JoinKey> keys;          // HashJoin; children = {build, probe}
  std::vector<ExprPtr> group_keys;    // GroupBy, column references
  std::vector<Aggregate> aggregates;  // GroupBy
  ExprPtr order;                      // TopK
  Direction direction = Direction::Desc;
  std::uint64_t k = kNoLimit;         // TopK, includes any offset; kNoLimit sorts everything
  std::uint64_t limit = 0, offset = 0;  // Limit
  std::vector<PlanPtr> children;
};

namespace plan {

inline PlanPtr make(Plan p) { return std::make_shared<const Plan>(std::move(p)); }

inline PlanPtr scan(std::string table, std::string alias = {}) {
  Plan p;
  p.kind = PlanKind::Scan;
  p.alias = alias.empty() ? table : std::move(alias);
  p.table = std::move(table);
  return make(std::move(p));
}

inline PlanPtr filter(PlanPtr child, ExprPtr predicate) {
  Plan p;
  p.kind = PlanKind::Filter;
  p.predicate = std::move(predicate);
  p.children = {std::move(child)};
  return make(std::move(p));
}

inline PlanPtr project(PlanPtr child, std::vector<ProjectItem> items) {
  Plan p;
  p.kind = PlanKind::Project;
  p.items = std::move(items);
  p.children = {std::move(child)};
  return make(std::move(p));
}

inline PlanPtr hash_join(JoinKind kind, PlanPtr build, PlanPtr probe, std::vector<JoinKey> keys) {
  Plan p;
  p.kind = PlanKind::HashJoin;
  p.join_kind = kind;
  p.keys = std::move(keys);
  p.children = {std::move(build), std::move(probe)};
  return make(std::move(p));
}

inline PlanPtr group_by(PlanPtr child, std::vector<ExprPtr> keys, std::vector<Aggregate> aggregates) {
  Plan p;
  p.kind = PlanKind::GroupBy;
  p.group_keys = std::move(keys);
  p.aggregates = std::move(aggregates);
  p.children = {std::move(child)};
  return make(std::move(p));
}

inline PlanPtr topk(PlanPtr child, ExprPtr order, Direction dir, std::uint64_t k) {
  Plan p;
  p.kind = PlanKind::TopK;
  p.order = std::move(order);
  p.direction = dir;
  p.k = k;
  p.children = {std::move(child)};
  return make(std::move(p));
}

inline PlanPtr limit(PlanPtr child, std::uint64_t limit, std::uint64_t offset = 0) {
  Plan p;
  p.kind = PlanKind::Limit;
  p.limit = limit;
  p.offset = offset;
  p.children = {std::move(child)};
  return make(std::move(p));
}

}  // namespace plan

inline std::string_view plan_kind_name(PlanKind k) {
  switch (k) {
    case PlanKind::Scan: return "scan";
    case PlanKind::Filter: return "filter";
    case PlanKind::Project: return "project";
    case PlanKind::HashJoin: return "hash_join";
    case PlanKind::GroupBy: return "group_by";
    case PlanKind::TopK: return "topk";
    case PlanKind::Limit: return "limit";
  }
  return "?";
}

inline std::string_view agg_name(AggFunc f) {
  switch (f) {
    case AggFunc::Count: return "count";
    case AggFunc::CountStar: return "count_star";
    case AggFunc::Sum: return "sum";
    case AggFunc::Min: return "min";
    case AggFunc::Max: return "max";
  }
  return "?";
}

/// Nodes in pre-order; the index of a node is its id.
inline std::vector<const Plan*> preorder(const Plan& root) {
  std::vector<const Plan*> out;
  std::function<void(const Plan&)> walk = [&](const Plan& p) {
    out.push_back(&p);
    for (const auto& c : p.children) walk(*c);
  };
  walk(root);
  return out;
}

// ---------------------------------------------------------------------------
// Schema inference and validation

namespace detail {

inline TypeResolver resolver_for(const std::vector<ColumnDef>& cols) {
  return [&cols](const std::string& name) -> std::optional<Type> {
    for (const auto& c : cols) {
      if (c.name == name) return c.type;
    }
    return std::nullopt;
  };
}

inline void expect_arity(const Plan& p, std::size_t n) {
  if (p.children.size() != n)
    throw BindError(std::string(plan_kind_name(p.kind)) + " expects " + std::to_string(n) + " input(s)");
  for (const auto& c : p.children) {
    if (!c) throw BindError(std::string(plan_kind_name(p.kind)) + " has a null input");
  }
}

inline void check_unique(const std::vector<ColumnDef>& cols) {
  std::set<std::string> seen;
  for (const auto& c : cols) {
    if (!seen.insert(c.name).second) throw BindError("duplicate output column '" + c.name + "'");
  }
}

}  // namespace detail

/// Output columns of `p`, type-checking every expression on the way.
/// Throws BindError for unknown names and TypeError for ill-typed expressions.
inline std::vector<ColumnDef> output_schema(const Plan& p, const Catalog& catalog) {
  std::vector<ColumnDef> out;
  switch (p.kind) {
    case PlanKind::Scan: {
      detail::expect_arity(p, 0);
      const Table& t = catalog.at(p.table);
      if (p.alias.empty()) throw BindError("scan of '" + p.table + "' needs an alias");
      for (const auto& c : t.schema().columns()) out.push_back({p.alias + "." + c.name, c.type});
      return out;
    }
    case PlanKind::Filter: {
      detail::expect_arity(p, 1);
      out = output_schema(*p.children[0], catalog);
      if (!p.predicate) throw BindError("filter without predicate");
      Type t = check_type(*p.predicate, detail::resolver_for(out));
      detail::expect_bool(t, "WHERE");
      return out;
    }
    case PlanKind::Project: {
      detail::expect_arity(p, 1);
      auto in = output_schema(*p.children[0], catalog);
      if (p.items.empty()) throw BindError("empty projection");
      for (const auto& item : p.items) out.push_back({item.name, check_type(*item.expr, detail::resolver_for(in))});
      detail::check_unique(out);
      return out;
    }
    case PlanKind::HashJoin: {
      detail::expect_arity(p, 2);
      auto build = output_schema(*p.children[0], catalog);
      auto probe = output_schema(*p.children[1], catalog);
      if (p.keys.empty()) throw BindError("hash join without keys");
      for (const auto& k : p.keys) {
        Type bt = check_type(*k.build, detail::resolver_for(build));
        Type pt = check_type(*k.probe, detail::resolver_for(probe));
        if (!comparable(bt, pt))
          throw TypeError("join keys " + to_string(*k.build) + " and " + to_string(*k.probe) + " are not comparable");
      }
      out = build;
      out.insert(out.end(), probe.begin(), probe.end());
      detail::check_unique(out);
      return out;
    }
    case PlanKind::GroupBy: {
      detail::expect_arity(p, 1);
      auto in = output_schema(*p.children[0], catalog);
      auto resolve = detail::resolver_for(in);
      for (const auto& key : p.group_keys) {
        if (key->kind != ExprKind::Column) throw BindError("GROUP BY keys must be columns, got " + to_string(*key));
        out.push_back({key->text, check_type(*key, resolve)});
      }
      for (const auto& a : p.aggregates) {
        if (a.func == AggFunc::CountStar) {
          out.push_back({a.name, Type::Int64});
          continue;
        }
        if (!a.arg) throw BindError(std::string(agg_name(a.func)) + " needs an argument");
        Type t = check_type(*a.arg, resolve);
        switch (a.func) {
          case AggFunc::Count: out.push_back({a.name, Type::Int64}); break;
          case AggFunc::Sum:
            if (!is_numeric(t) && t != Type::Null) throw TypeError("sum needs a numeric argument");
            out.push_back({a.name, t == Type::Float64 ? Type::Float64 : Type::Int64});
            break;
          default: out.push_back({a.name, t}); break;
        }
      }
      detail::check_unique(out);
      return out;
    }
    case PlanKind::TopK: {
      detail::expect_arity(p, 1);
      out = output_schema(*p.children[0], catalog);
      if (!p.order) throw BindError("top-k without order expression");
      check_type(*p.order, detail::resolver_for(out));
      return out;
    }
    case PlanKind::Limit:
      detail::expect_arity(p, 1);
      return output_schema(*p.children[0], catalog);
  }
  throw BindError("unknown plan node");
}

inline void validate(const Plan& p, const Catalog& catalog) { (void)output_schema(p, catalog); }

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json plan_to_json(const Plan& p) {
  using nlohmann::json;
  json j = {{"op", plan_kind_name(p.kind)}};
  switch (p.kind) {
    case PlanKind::Scan:
      j["table"] = p.table;
      j["alias"] = p.alias;
      return j;
    case PlanKind::Filter: j["predicate"] = expr_to_json(*p.predicate); break;
    case PlanKind::Project: {
      json items = json::array();
      for (const auto& i : p.items) items.push_back({{"name", i.name}, {"expr", expr_to_json(*i.expr)}});
      j["items"] = items;
      break;
    }
    case PlanKind::HashJoin: {
      j["kind"] = p.join_kind == JoinKind::Inner ? "inner" : "left_outer";
      json keys = json::array();
      for (const auto& k : p.keys) keys.push_back({{"build", expr_to_json(*k.build)}, {"probe", expr_to_json(*k.probe)}});
      j["keys"] = keys;
      j["build"] = plan_to_json(*p.children.at(0));
      j["probe"] = plan_to_json(*p.children.at(1));
      return j;
    }
    case PlanKind::GroupBy: {
      json keys = json::array();
      for (const auto& k : p.group_keys) keys.push_back(expr_to_json(*k));
      json aggs = json::array();
      for (const auto& a : p.aggregates) {
        json aj = {{"fn", agg_name(a.func)}, {"name", a.name}};
        if (a.arg) aj["arg"] = expr_to_json(*a.arg);
        aggs.push_back(aj);
      }
      j["keys"] = keys;
      j["aggregates"] = aggs;
      break;
    }
    case PlanKind::TopK:
      j["order"] = expr_to_json(*p.order);
      j["direction"] = direction_name(p.direction);
      j["k"] = p.k == kNoLimit ? json(nullptr) : json(p.k);
      break;
    case PlanKind::Limit:
      j["limit"] = p.limit;
      j["offset"] = p.offset;
      break;
  }
  j["input"] = plan_to_json(*p.children.at(0));
  return j;
}

inline PlanPtr plan_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("op")) throw InputError("plan node needs an \"op\"");
  std::string op = j["op"].get<std::string>();
  auto input = [&] {
    if (!j.contains("input")) throw InputError("'" + op + "' needs an \"input\"");
    return plan_from_json(j["input"]);
  };
  try {
    if (op == "scan") return plan::scan(j.at("table").get<std::string>(), j.value("alias", std::string()));
    if (op == "filter") return plan::filter(input(), expr_from_json(j.at("predicate")));
    if (op == "project") {
      std::vector<ProjectItem> items;
      for (const auto& i : j.at("items")) items.push_back({i.at("name").get<std::string>(), expr_from_json(i.at("expr"))});
      return plan::project(input(), std::move(items));
    }
    if (op == "hash_join") {
      std::string kind = j.value("kind", std::string("inner"));
      if (kind != "inner" && kind != "left_outer") throw InputError("unknown join kind '" + kind + "'");
      std::vector<JoinKey> keys;
      for (const auto& k : j.at("keys")) keys.push_back({expr_from_json(k.at("build")), expr_from_json(k.at("probe"))});
      return plan::hash_join(kind == "inner" ? JoinKind::Inner : JoinKind::LeftOuter, plan_from_json(j.at("build")),
                             plan_from_json(j.at("probe")), std::move(keys));
    }
    if (op == "group_by") {
      std::vector<ExprPtr> keys;
      for (const auto& k : j.at("keys")) keys.push_back(expr_from_json(k));
      std::vector<Aggregate> aggs;
      for (const auto& a : j.at("aggregates")) {
        std::string fn = a.at("fn").get<std::string>();
        Aggregate agg;
        static const std::pair<const char*, AggFunc> kFns[] = {{"count", AggFunc::Count},
                                                              {"count_star", AggFunc::CountStar},
                                                              {"sum", AggFunc::Sum},
                                                              {"min", AggFunc::Min},
                                                              {"max", AggFunc::Max}};
        bool found = false;
        for (auto [name, f] : kFns) {
          if (fn == name) {
            agg.func = f;
            found = true;
          }
        }
        if (!found) throw InputError("unknown aggregate '" + fn + "'");
        agg.name = a.at("name").get<std::string>();
        if (a.contains("arg")) agg.arg = expr_from_json(a["arg"]);
        aggs.push_back(std::move(agg));
      }
      return plan::group_by(input(), std::move(keys), std::move(aggs));
    }
    if (op == "topk") {
      std::string dir = j.value("direction", std::string("desc"));
      if (dir != "desc" && dir != "asc") throw InputError("unknown direction '" + dir + "'");
      std::uint64_t k = j.contains("k") && !j["k"].is_null() ? j["k"].get<std::uint64_t>() : kNoLimit;
      return plan::topk(input(), expr_from_json(j.at("order")), dir == "desc" ? Direction::Desc : Direction::Asc, k);
    }
    if (op == "limit") return plan::limit(input(), j.at("limit").get<std::uint64_t>(), j.value("offset", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed '" + op + "' node: " + e.what());
  }
  throw InputError("unknown plan op '" + op + "'");
}

/// One-line description of a node without its inputs.
inline std::string describe(const Plan& p) {
  switch (p.kind) {
    case PlanKind::Scan: return "Scan " + p.table + (p.alias != p.table ? " AS " + p.alias : "");
    case PlanKind::Filter: return "Filter " + to_string(*p.predicate);
    case PlanKind::Project: {
      std::string s = "Project ";
      for (std::size_t i = 0; i < p.items.size(); ++i) {
        if (i) s += ", ";
        s += to_string(*p.items[i].expr);
        if (p.items[i].name != to_string(*p.items[i].expr)) s += " AS " + p.items[i].name;
      }
      return s;
    }
    case PlanKind::HashJoin: {
      std::string s = p.join_kind == JoinKind::Inner ? "HashJoin inner on " : "HashJoin left_outer on ";
      for (std::size_t i = 0; i < p.keys.size(); ++i) {
        if (i) s += " AND ";
        s += to_string(*p.keys[i].build) + " = " + to_string(*p.keys[i].probe);
      }
      return s;
    }
    case PlanKind::GroupBy: {
      std::string s = "GroupBy [";
      for (std::size_t i = 0; i < p.group_keys.size(); ++i) s += (i ? ", " : "") + to_string(*p.group_keys[i]);
      s += "] aggregates [";
      for (std::size_t i = 0; i < p.aggregates.size(); ++i) {
        const auto& a = p.aggregates[i];
        s += (i ? ", " : "") + std::string(agg_name(a.func)) + "(" + (a.arg ? to_string(*a.arg) : "*") + ") AS " + a.name;
      }
      return s + "]";
    }
    case PlanKind::TopK:
      return "TopK " + to_string(*p.order) + " " + std::string(direction_name(p.direction)) +
             (p.k == kNoLimit ? std::string(" (full sort)") : " k=" + std::to_string(p.k));
    case PlanKind::Limit: return "Limit " + std::to_string(p.limit) + " offset " + std::to_string(p.offset);
  }
  return "?";
}

/// Indented tree; `annotate(node)` may add lines printed under a node.
inline std::string render_plan(const Plan& root,
                               const std::function<std::vector<std::string>(const Plan&)>& annotate = {}) {
  std::string out;
  std::function<void(const Plan&, int)> walk = [&](const Plan& p, int depth) {
    std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    out += pad + describe(p) + "\n";
    if (annotate) {
      for (const auto& line : annotate(p)) out += pad + "  | " + line + "\n";
    }
    for (const auto& c : p.children) walk(*c, depth + 1);
  };
  walk(root, 0);
  return out;
}

}  // namespace prunedb
