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

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "prunedb/error.hpp"

namespace prunedb {

enum class Type : std::uint8_t { Null, Int64, Float64, Utf8, Bool };

inline std::string_view type_name(Type t) {
  switch (t) {
    case Type::Null: return "null";
    case Type::Int64: return "int64";
    case Type::Float64: return "float64";
    case Type::Utf8: return "utf8";
    case Type::Bool: return "bool";
  }
  return "?";
}

inline Type parse_type(std::string_view name) {
  if (name == "int64" || name == "int" || name == "bigint") return Type::Int64;
  if (name == "float64" || name == "double" || name == "float") return Type::Float64;
  if (name == "utf8" || name == "string" || name == "varchar") return Type::Utf8;
  if (name == "bool" || name == "boolean") return Type::Bool;
  throw InputError("unknown column type '" + std::string(name) + "'");
}

inline bool is_numeric(Type t) { return t == Type::Int64 || t == Type::Float64; }

/// A single scalar: Int64, Float64, Utf8, Bool or Null.
class Value {
 public:
  using Storage = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

  Value() = default;
  Value(int v) : v_(static_cast<std::int64_t>(v)) {}
  Value(std::int64_t v) : v_(v) {}
  Value(double v) : v_(v) {}
  Value(bool v) : v_(v) {}
  Value(std::string v) : v_(std::move(v)) {}
  Value(std::string_view v) : v_(std::string(v)) {}
  Value(const char* v) : v_(std::string(v)) {}

  static Value null() { return Value(); }

  Type type() const { return static_cast<Type>(v_.index()); }
  bool is_null() const { return v_.index() == 0; }
  bool is_numeric() const { return prunedb::is_numeric(type()); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_double() const { return std::get<double>(v_); }
  const std::string& as_string() const { return std::get<std::string>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }

  /// Numeric value widened to double. Precondition: is_numeric().
  double to_double() const {
    return type() == Type::Int64 ? static_cast<double>(as_int()) : as_double();
  }

  const Storage& storage() const { return v_; }

  /// Structural equality: same type and same payload. NaN equals NaN.
  friend bool operator==(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index()) return false;
    if (a.type() == Type::Float64) {
      double x = a.as_double(), y = b.as_double();
      return (std::isnan(x) && std::isnan(y)) || x == y;
    }
    return a.v_ == b.v_;
  }

  std::string to_string() const;

 private:
  Storage v_;
};

inline std::ostream& operator<<(std::ostream& os, const Value& v) { return os << v.to_string(); }

namespace detail {

// Floats: NaN is the greatest value, -0.0 and 0.0 compare equal.
inline std::weak_ordering compare_doubles(double a, double b) {
  bool an = std::isnan(a), bn = std::isnan(b);
  if (an || bn) {
    if (an && bn) return std::weak_ordering::equivalent;
    return an ? std::weak_ordering::greater : std::weak_ordering::less;
  }
  if (a < b) return std::weak_ordering::less;
  if (a > b) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

// Exact comparison of an integer against a double.
inline std::weak_ordering compare_int_double(std::int64_t i, double d) {
  if (std::isnan(d)) return std::weak_ordering::less;
  constexpr double kTwo63 = 9223372036854775808.0;
  if (d >= kTwo63) return std::weak_ordering::less;
  if (d < -kTwo63) return std::weak_ordering::greater;
  double t = std::trunc(d);
  auto ti = static_cast<std::int64_t>(t);
  if (i < ti) return std::weak_ordering::less;
  if (i > ti) return std::weak_ordering::greater;
  double frac = d - t;
  if (frac > 0) return std::weak_ordering::less;
  if (frac < 0) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

inline std::weak_ordering reverse(std::weak_ordering o) {
  if (o == std::weak_ordering::less) return std::weak_ordering::greater;
  if (o == std::weak_ordering::greater) return std::weak_ordering::less;
  return o;
}

}  // namespace detail

/// True if values of these two types can be compared by compare().
inline bool comparable(Type a, Type b) {
  return a == b || (is_numeric(a) && is_numeric(b));
}

/// SQL value ordering between two non-null values. Integers and floats
/// compare numerically with each other; any other pairing of distinct types
/// is a TypeError.
inline std::weak_ordering compare(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) throw TypeError("cannot order NULL");
  Type ta = a.type(), tb = b.type();
  if (ta == tb) {
    switch (ta) {
      case Type::Int64: return a.as_int() <=> b.as_int();
      case Type::Float64: return detail::compare_doubles(a.as_double(), b.as_double());
      case Type::Utf8: {
        int c = a.as_string().compare(b.as_string());
        return c < 0 ? std::weak_ordering::less
                     : (c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent);
      }
      case Type::Bool: return static_cast<int>(a.as_bool()) <=> static_cast<int>(b.as_bool());
      case Type::Null: break;
    }
  }
  if (ta == Type::Int64 && tb == Type::Float64) return detail::compare_int_double(a.as_int(), b.as_double());
  if (ta == Type::Float64 && tb == Type::Int64)
    return detail::reverse(detail::compare_int_double(b.as_int(), a.as_double()));
  throw TypeError("cannot compare " + std::string(type_name(ta)) + " with " +
                  std::string(type_name(tb)));
}

inline bool less(const Value& a, const Value& b) { return compare(a, b) < 0; }
inline bool equivalent(const Value& a, const Value& b) { return compare(a, b) == 0; }

inline const Value& min_value(const Value& a, const Value& b) { return less(b, a) ? b : a; }
inline const Value& max_value(const Value& a, const Value& b) { return less(a, b) ? b : a; }

/// Ordering used to sort rows that may contain NULLs: NULL sorts after every
/// non-null value, non-null values use compare().
inline std::weak_ordering compare_nulls_last(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) {
    if (a.is_null() && b.is_null()) return std::weak_ordering::equivalent;
    return a.is_null() ? std::weak_ordering::greater : std::weak_ordering::less;
  }
  return compare(a, b);
}

/// A strict total order over all values regardless of type, for canonical
/// sorting (e.g. comparing result multisets). Orders first by type tag.
inline std::weak_ordering storage_order(const Value& a, const Value& b) {
  if (a.type() != b.type()) return a.type() <=> b.type();
  if (a.is_null()) return std::weak_ordering::equivalent;
  return compare(a, b);
}

inline std::string Value::to_string() const {
  switch (type()) {
    case Type::Null: return "NULL";
    case Type::Int64: return std::to_string(as_int());
    case Type::Float64: {
      std::ostringstream os;
      os.precision(17);
      os << as_double();
      return os.str();
    }
    case Type::Utf8: return as_string();
    case Type::Bool: return as_bool() ? "true" : "false";
  }
  return "?";
}

struct ValueHash {
  std::size_t operator()(const Value& v) const {
    switch (v.type()) {
      case Type::Null: return 0x9e3779b9u;
      case Type::Int64: return std::hash<std::int64_t>{}(v.as_int());
      case Type::Float64: {
        double d = v.as_double();
        if (std::isnan(d)) return 0x7ff8u;
        if (d == 0.0) d = 0.0;
        return std::hash<double>{}(d);
      }
      case Type::Utf8: return std::hash<std::string>{}(v.as_string());
      case Type::Bool: return v.as_bool() ? 1u : 2u;
    }
    return 0;
  }
};

}  // namespace prunedb
