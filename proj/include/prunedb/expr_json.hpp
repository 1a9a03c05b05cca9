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

// JSON AST for expressions. Every node is an object with an "op"
// discriminator:
//   {"op":"col","name":"t.s"}
//   {"op":"lit","type":"int64","value":50}
//   {"op":"add"|"sub"|"mul"|"div"|"lt"|"le"|"eq"|"ne"|"ge"|"gt","args":[a,b]}
//   {"op":"and"|"or","args":[...]}   {"op":"not","args":[a]}
//   {"op":"if","args":[cond,then,else]}
//   {"op":"like","args":[a],"pattern":"Alpine%"}
//   {"op":"starts_with","args":[a],"prefix":"Marked-"}
//   {"op":"is_null","args":[a]}
//   {"op":"in","args":[a],"list":[<lit>, ...]}

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "prunedb/expr.hpp"

namespace prunedb {

inline nlohmann::json value_to_json(const Value& v) {
  nlohmann::json j = {{"type", type_name(v.type())}};
  switch (v.type()) {
    case Type::Null: j["value"] = nullptr; break;
    case Type::Int64: j["value"] = v.as_int(); break;
    case Type::Float64: {
      double d = v.as_double();
      if (std::isnan(d)) j["value"] = "NaN";
      else if (std::isinf(d)) j["value"] = d > 0 ? "Infinity" : "-Infinity";
      else j["value"] = d;
      break;
    }
    case Type::Utf8: j["value"] = v.as_string(); break;
    case Type::Bool: j["value"] = v.as_bool(); break;
  }
  return j;
}

inline Value value_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type")) throw InputError("literal needs a \"type\"");
  std::string t = j["type"].get<std::string>();
  const auto& v = j.contains("value") ? j["value"] : nlohmann::json(nullptr);
  if (t == "null" || v.is_null()) return Value::null();
  switch (parse_type(t)) {
    case Type::Int64: return Value(v.get<std::int64_t>());
    case Type::Float64:
      if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s == "NaN") return Value(std::numeric_limits<double>::quiet_NaN());
        if (s == "Infinity") return Value(std::numeric_limits<double>::infinity());
        if (s == "-Infinity") return Value(-std::numeric_limits<double>::infinity());
        throw InputError("bad float literal '" + s + "'");
      }
      return Value(v.get<double>());
    case Type::Utf8: return Value(v.get<std::string>());
    case Type::Bool: return Value(v.get<bool>());
    case Type::Null: break;
  }
  return Value::null();
}

namespace detail {

inline const char* arith_op_name(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "add";
    case ArithOp::Sub: return "sub";
    case ArithOp::Mul: return "mul";
    case ArithOp::Div: return "div";
  }
  return "?";
}

inline const char* cmp_op_name(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "lt";
    case CmpOp::Le: return "le";
    case CmpOp::Eq: return "eq";
    case CmpOp::Ne: return "ne";
    case CmpOp::Ge: return "ge";
    case CmpOp::Gt: return "gt";
  }
  return "?";
}

}  // namespace detail

inline nlohmann::json expr_to_json(const Expr& e) {
  nlohmann::json j;
  auto args = [&] {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : e.children) a.push_back(expr_to_json(*c));
    return a;
  };
  switch (e.kind) {
    case ExprKind::Column: return {{"op", "col"}, {"name", e.text}};
    case ExprKind::Literal: {
      j = value_to_json(e.value);
      j["op"] = "lit";
      return j;
    }
    case ExprKind::Arith: return {{"op", detail::arith_op_name(e.arith)}, {"args", args()}};
    case ExprKind::Cmp: return {{"op", detail::cmp_op_name(e.cmp)}, {"args", args()}};
    case ExprKind::And: return {{"op", "and"}, {"args", args()}};
    case ExprKind::Or: return {{"op", "or"}, {"args", args()}};
    case ExprKind::Not: return {{"op", "not"}, {"args", args()}};
    case ExprKind::If: return {{"op", "if"}, {"args", args()}};
    case ExprKind::Like: return {{"op", "like"}, {"args", args()}, {"pattern", e.text}};
    case ExprKind::StartsWith: return {{"op", "starts_with"}, {"args", args()}, {"prefix", e.text}};
    case ExprKind::IsNull: return {{"op", "is_null"}, {"args", args()}};
    case ExprKind::InList: {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& v : e.list) list.push_back(value_to_json(v));
      return {{"op", "in"}, {"args", args()}, {"list", list}};
    }
  }
  return j;
}

inline ExprPtr expr_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("op")) throw InputError("expression node needs an \"op\"");
  std::string op = j["op"].get<std::string>();
  std::vector<ExprPtr> args;
  if (j.contains("args")) {
    for (const auto& a : j["args"]) args.push_back(expr_from_json(a));
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw InputError("'" + op + "' expects " + std::to_string(n) + " arguments, got " +
                       std::to_string(args.size()));
  };
  if (op == "col") return ex::col(j.at("name").get<std::string>());
  if (op == "lit") return ex::lit(value_from_json(j));
  static const std::pair<const char*, ArithOp> kArith[] = {
      {"add", ArithOp::Add}, {"sub", ArithOp::Sub}, {"mul", ArithOp::Mul}, {"div", ArithOp::Div}};
  for (auto [name, a] : kArith) {
    if (op == name) {
      need(2);
      return ex::arith(a, args[0], args[1]);
    }
  }
  static const std::pair<const char*, CmpOp> kCmp[] = {{"lt", CmpOp::Lt}, {"le", CmpOp::Le},
                                                      {"eq", CmpOp::Eq}, {"ne", CmpOp::Ne},
                                                      {"ge", CmpOp::Ge}, {"gt", CmpOp::Gt}};
  for (auto [name, c] : kCmp) {
    if (op == name) {
      need(2);
      return ex::cmp(c, args[0], args[1]);
    }
  }
  if (op == "and" || op == "or") {
    if (args.empty()) throw InputError("'" + op + "' needs arguments");
    return ex::junction(op == "and" ? ExprKind::And : ExprKind::Or, std::move(args));
  }
  if (op == "not") {
    need(1);
    return ex::not_(args[0]);
  }
  if (op == "if") {
    need(3);
    return ex::if_(args[0], args[1], args[2]);
  }
  if (op == "like") {
    need(1);
    return ex::like(args[0], j.at("pattern").get<std::string>());
  }
  if (op == "starts_with") {
    need(1);
    return ex::starts_with(args[0], j.at("prefix").get<std::string>());
  }
  if (op == "is_null") {
    need(1);
    return ex::is_null(args[0]);
  }
  if (op == "in") {
    need(1);
    std::vector<Value> list;
    for (const auto& v : j.at("list")) list.push_back(value_from_json(v));
    return ex::in_list(args[0], std::move(list));
  }
  throw InputError("unknown expression op '" + op + "'");
}

}  // namespace prunedb
