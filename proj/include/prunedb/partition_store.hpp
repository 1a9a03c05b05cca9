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

// Tables as ordered lists of immutable micro-partitions, each carrying a
// min/max/row-count/null-count zone map per column.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prunedb/error.hpp"
#include "prunedb/value.hpp"

namespace prunedb {

using PartitionId = std::uint32_t;
using Row = std::vector<Value>;

struct ColumnDef {
  std::string name;
  Type type = Type::Int64;

  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

class TableSchema {
 public:
  TableSchema() = default;
  explicit TableSchema(std::vector<ColumnDef> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (columns_[j].name == columns_[i].name)
          throw TypeError("duplicate column '" + columns_[i].name + "'");
      }
    }
  }

  const std::vector<ColumnDef>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  const ColumnDef& operator[](std::size_t i) const { return columns_[i]; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return i;
    }
    return std::nullopt;
  }

  static TableSchema from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_array())
      throw InputError("schema document must be an object with a \"columns\" array");
    std::vector<ColumnDef> cols;
    for (const auto& c : doc["columns"]) {
      if (!c.contains("name") || !c.contains("type"))
        throw InputError("schema column needs \"name\" and \"type\"");
      cols.push_back({c["name"].get<std::string>(), parse_type(c["type"].get<std::string>())});
    }
    return TableSchema(std::move(cols));
  }

  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns_) cols.push_back({{"name", c.name}, {"type", type_name(c.type)}});
    return {{"columns", cols}};
  }

  friend bool operator==(const TableSchema&, const TableSchema&) = default;

 private:
  std::vector<ColumnDef> columns_;
};

/// Zone-map entry for one column of one partition.
struct ColumnStats {
  std::optional<Value> min;
  std::optional<Value> max;
  std::uint64_t row_count = 0;
  std::uint64_t null_count = 0;

  bool all_null() const { return null_count == row_count; }
  bool has_nulls() const { return null_count > 0; }

  friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

/// Min/max over the non-null cells plus exact counts. Mixed non-null types
/// are rejected.
inline ColumnStats compute_stats(std::span<const Value> column) {
  ColumnStats s;
  s.row_count = column.size();
  std::optional<Type> seen;
  for (const Value& v : column) {
    if (v.is_null()) {
      ++s.null_count;
      continue;
    }
    if (seen && *seen != v.type())
      throw TypeError("mixed column types: " + std::string(type_name(*seen)) + " and " +
                      std::string(type_name(v.type())));
    seen = v.type();
    if (!s.min || less(v, *s.min)) s.min = v;
    if (!s.max || less(*s.max, v)) s.max = v;
  }
  return s;
}

class MicroPartition {
 public:
  MicroPartition(PartitionId id, std::vector<std::vector<Value>> columns)
      : id_(id), columns_(std::move(columns)) {
    if (columns_.empty()) throw TypeError("partition without columns");
    std::size_t n = columns_.front().size();
    if (n == 0) throw TypeError("empty partition");
    stats_.reserve(columns_.size());
    for (const auto& c : columns_) {
      if (c.size() != n) throw TypeError("ragged partition columns");
      stats_.push_back(compute_stats(c));
    }
  }

  PartitionId id() const { return id_; }
  std::size_t row_count() const { return columns_.front().size(); }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<Value>& column(std::size_t i) const { return columns_[i]; }
  const ColumnStats& stats(std::size_t i) const { return stats_[i]; }
  const std::vector<ColumnStats>& all_stats() const { return stats_; }

  Row row(std::size_t r) const {
    Row out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c[r]);
    return out;
  }

 private:
  PartitionId id_;
  std::vector<std::vector<Value>> columns_;
  std::vector<ColumnStats> stats_;
};

/// Immutable table. Partition ids start at 1 and increase by one.
class Table {
 public:
  Table(std::string name, TableSchema schema, std::vector<MicroPartition> partitions)
      : name_(std::move(name)), schema_(std::move(schema)), partitions_(std::move(partitions)) {
    for (std::size_t i = 1; i < partitions_.size(); ++i) {
      if (partitions_[i].id() <= partitions_[i - 1].id())
        throw TypeError("partition ids must be strictly increasing");
    }
  }

  const std::string& name() const { return name_; }
  const TableSchema& schema() const { return schema_; }
  const std::vector<MicroPartition>& partitions() const { return partitions_; }
  std::size_t partition_count() const { return partitions_.size(); }

  const MicroPartition& partition(PartitionId id) const {
    auto it = std::lower_bound(partitions_.begin(), partitions_.end(), id,
                               [](const MicroPartition& p, PartitionId v) { return p.id() < v; });
    if (it == partitions_.end() || it->id() != id)
      throw BindError("table '" + name_ + "' has no partition " + std::to_string(id));
    return *it;
  }

  std::vector<PartitionId> partition_ids() const {
    std::vector<PartitionId> ids;
    ids.reserve(partitions_.size());
    for (const auto& p : partitions_) ids.push_back(p.id());
    return ids;
  }

  std::size_t row_count() const {
    std::size_t n = 0;
    for (const auto& p : partitions_) n += p.row_count();
    return n;
  }

  /// Stats of a column of a partition, or nullptr if the column is unknown.
  const ColumnStats* stats(PartitionId id, std::string_view column) const {
    auto idx = schema_.index_of(column);
    if (!idx) return nullptr;
    return &partition(id).stats(*idx);
  }

 private:
  std::string name_;
  TableSchema schema_;
  std::vector<MicroPartition> partitions_;
};

inline void check_row_conforms(const TableSchema& schema, const Row& row, std::size_t row_index) {
  if (row.size() != schema.size())
    throw TypeError("row " + std::to_string(row_index) + " has " + std::to_string(row.size()) +
                    " values, schema has " + std::to_string(schema.size()));
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (!row[c].is_null() && row[c].type() != schema[c].type)
      throw TypeError("row " + std::to_string(row_index) + " column '" + schema[c].name +
                      "' holds " + std::string(type_name(row[c].type())) + ", expected " +
                      std::string(type_name(schema[c].type)));
  }
}

/// Chunks rows into consecutive partitions of target_rows_per_partition rows
/// (the last may be shorter). When sort_columns is non-empty the rows are
/// first stably sorted by those columns, NULLs last.
inline Table build_table(std::string name, TableSchema schema, std::vector<Row> rows,
                         std::size_t target_rows_per_partition,
                         const std::vector<std::string>& sort_columns = {}) {
  if (schema.empty()) throw TypeError("empty schema");
  if (target_rows_per_partition == 0) throw InputError("target_rows_per_partition must be >= 1");
  for (std::size_t i = 0; i < rows.size(); ++i) check_row_conforms(schema, rows[i], i);

  if (!sort_columns.empty()) {
    std::vector<std::size_t> keys;
    for (const auto& c : sort_columns) {
      auto idx = schema.index_of(c);
      if (!idx) throw BindError("unknown sort column '" + c + "'");
      keys.push_back(*idx);
    }
    std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
      for (std::size_t k : keys) {
        auto o = compare_nulls_last(a[k], b[k]);
        if (o != 0) return o < 0;
      }
      return false;
    });
  }

  std::vector<MicroPartition> parts;
  PartitionId next_id = 1;
  for (std::size_t begin = 0; begin < rows.size(); begin += target_rows_per_partition) {
    std::size_t end = std::min(rows.size(), begin + target_rows_per_partition);
    std::vector<std::vector<Value>> cols(schema.size());
    for (auto& c : cols) c.reserve(end - begin);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < schema.size(); ++c) cols[c].push_back(std::move(rows[r][c]));
    }
    parts.emplace_back(next_id++, std::move(cols));
  }
  return Table(std::move(name), std::move(schema), std::move(parts));
}

namespace detail {

inline Value parse_cell(std::string_view cell, Type type, std::size_t line, std::size_t column) {
  auto fail = [&](std::string_view what) -> InputError {
    return InputError("CSV parse error at row " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": " + std::string(what) + " '" +
                      std::string(cell) + "'");
  };
  switch (type) {
    case Type::Utf8: return Value(std::string(cell));
    case Type::Int64: {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size() || cell.empty())
        throw fail("invalid int64");
      return Value(v);
    }
    case Type::Float64: {
      std::string s(cell);
      if (s == "NaN" || s == "nan") return Value(std::numeric_limits<double>::quiet_NaN());
      char* end = nullptr;
      double v = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size()) throw fail("invalid float64");
      return Value(v);
    }
    case Type::Bool: {
      std::string s(cell);
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (s == "true" || s == "1" || s == "t") return Value(true);
      if (s == "false" || s == "0" || s == "f") return Value(false);
      throw fail("invalid bool");
    }
    case Type::Null: break;
  }
  throw fail("unsupported type");
}

}  // namespace detail

/// RFC-4180 record reader: quoted fields, doubled quotes, CRLF or LF line
/// endings and newlines inside quotes. Returns false at end of input.
/// `quoted` reports per field whether it was quoted.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields,
                            std::vector<bool>& quoted, std::size_t& line) {
  fields.clear();
  quoted.clear();
  int ch = in.get();
  if (ch == EOF) return false;
  ++line;
  std::string field;
  bool in_quotes = false, was_quoted = false;
  while (true) {
    if (ch == EOF) {
      if (in_quotes) throw InputError("CSV parse error at row " + std::to_string(line) + ": unterminated quote");
      break;
    }
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      in_quotes = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      quoted.push_back(was_quoted);
      field.clear();
      was_quoted = false;
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field.push_back(c);
    }
    ch = in.get();
  }
  fields.push_back(std::move(field));
  quoted.push_back(was_quoted);
  return true;
}

/// Parses CSV text whose header row matches the schema's column names.
/// An unquoted cell equal to null_token becomes NULL.
inline std::vector<Row> parse_csv(std::istream& in, const TableSchema& schema,
                                  std::string_view null_token = "") {
  std::vector<std::string> fields;
  std::vector<bool> quoted;
  std::size_t line = 0;
  if (!read_csv_record(in, fields, quoted, line)) throw InputError("CSV input has no header row");
  if (fields.size() != schema.size())
    throw InputError("CSV header has " + std::to_string(fields.size()) + " columns, schema has " +
                     std::to_string(schema.size()));
  for (std::size_t c = 0; c < fields.size(); ++c) {
    if (fields[c] != schema[c].name)
      throw InputError("CSV header column " + std::to_string(c + 1) + " is '" + fields[c] +
                       "', schema expects '" + schema[c].name + "'");
  }
  std::vector<Row> rows;
  while (read_csv_record(in, fields, quoted, line)) {
    if (fields.size() == 1 && fields[0].empty() && !quoted[0] && in.peek() == EOF) break;
    if (fields.size() != schema.size())
      throw InputError("CSV arity mismatch at row " + std::to_string(line) + ": " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(schema.size()));
    Row row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!quoted[c] && fields[c] == null_token)
        row.push_back(Value::null());
      else
        row.push_back(detail::parse_cell(fields[c], schema[c].type, line, c + 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<Row> ingest_csv(const std::string& path, const TableSchema& schema,
                                   std::string_view null_token = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open CSV file '" + path + "'");
  return parse_csv(in, schema, null_token);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

// Strings are always quoted so that a string equal to the null token
// survives a round trip.
inline std::string quote_csv(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

/// Writes rows as CSV with a header; NULL cells are written as null_token.
inline void write_csv(std::ostream& out, const TableSchema& schema, const std::vector<Row>& rows,
                      std::string_view null_token = "") {
  for (std::size_t c = 0; c < schema.size(); ++c) out << (c ? "," : "") << csv_escape(schema[c].name);
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      if (row[c].is_null()) out << null_token;
      else if (row[c].type() == Type::Utf8) out << quote_csv(row[c].as_string());
      else out << row[c].to_string();
    }
    out << "\n";
  }
}

/// Name → table registry shared by the planner and executors.
class Catalog {
 public:
  void add(Table table) {
    auto name = table.name();
    tables_[name] = std::make_shared<const Table>(std::move(table));
  }

  const Table* find(std::string_view name) const {
    auto it = tables_.find(std::string(name));
    return it == tables_.end() ? nullptr : it->second.get();
  }

  const Table& at(std::string_view name) const {
    if (const Table* t = find(name)) return *t;
    throw BindError("unknown table '" + std::string(name) + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : tables_) out.push_back(k);
    return out;
  }

 private:
  std::map<std::string, std::shared_ptr<const Table>> tables_;
};

}  // namespace prunedb
