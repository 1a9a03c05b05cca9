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

// On-disk catalog: a directory with, per table, `<name>.table.json`
// (schema plus partition row counts) and `<name>.csv` (rows in partition
// order). Reloading reproduces the exact partitioning.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prunedb/partition_store.hpp"

namespace prunedb {

inline constexpr std::string_view kNullToken = "\\N";

inline void save_table(const Table& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json parts = nlohmann::json::array();
  std::vector<Row> rows;
  for (const auto& p : t.partitions()) {
    parts.push_back(p.row_count());
    for (std::size_t r = 0; r < p.row_count(); ++r) rows.push_back(p.row(r));
  }
  nlohmann::json meta = {{"name", t.name()}, {"schema", t.schema().to_json()}, {"partitions", parts}};
  std::ofstream m(dir / (t.name() + ".table.json"), std::ios::binary);
  m << meta.dump(2) << "\n";
  std::ofstream c(dir / (t.name() + ".csv"), std::ios::binary);
  write_csv(c, t.schema(), rows, kNullToken);
  if (!m || !c) throw InputError("cannot write table files into '" + dir.string() + "'");
}

inline Table load_table(const std::filesystem::path& meta_path) {
  std::ifstream m(meta_path, std::ios::binary);
  if (!m) throw InputError("cannot open '" + meta_path.string() + "'");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(m);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed table file '" + meta_path.string() + "': " + e.what());
  }
  if (!meta.contains("name") || !meta.contains("schema") || !meta.contains("partitions"))
    throw InputError("table file '" + meta_path.string() + "' needs name, schema and partitions");
  std::string name = meta["name"].get<std::string>();
  TableSchema schema = TableSchema::from_json(meta["schema"]);
  std::vector<Row> rows = ingest_csv((meta_path.parent_path() / (name + ".csv")).string(), schema, kNullToken);
  std::vector<MicroPartition> parts;
  std::size_t at = 0;
  PartitionId id = 1;
  for (const auto& n : meta["partitions"]) {
    auto count = n.get<std::size_t>();
    if (count == 0 || at + count > rows.size())
      throw InputError("partition row counts of '" + name + "' do not match its CSV");
    std::vector<std::vector<Value>> cols(schema.size());
    for (std::size_t r = at; r < at + count; ++r) {
      for (std::size_t c = 0; c < schema.size(); ++c) cols[c].push_back(std::move(rows[r][c]));
    }
    parts.emplace_back(id++, std::move(cols));
    at += count;
  }
  if (at != rows.size()) throw InputError("partition row counts of '" + name + "' do not match its CSV");
  return Table(std::move(name), std::move(schema), std::move(parts));
}

/// Loads every `*.table.json` in `dir`. A missing directory is an empty catalog.
inline Catalog load_catalog(const std::filesystem::path& dir) {
  Catalog c;
  if (!std::filesystem::exists(dir)) return c;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::string f = e.path().filename().string();
    if (f.size() > 11 && f.ends_with(".table.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) c.add(load_table(f));
  return c;
}

}  // namespace prunedb
