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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"

using namespace prunedb;
namespace fs = std::filesystem;

namespace {

GeneratorSpec spec_with(double clustering, std::uint64_t seed = 7) {
  return GeneratorSpec::from_json({{"rows", 4000},
                                   {"partition_rows", 100},
                                   {"clustering", clustering},
                                   {"seed", seed},
                                   {"dim_rows", 20},
                                   {"columns",
                                    {{{"name", "id"}, {"distribution", "sequential"}, {"cardinality", 4000}},
                                     {{"name", "v"}, {"distribution", "uniform"}, {"cardinality", 50}, {"null_fraction", 0.1}},
                                     {{"name", "tag"}, {"type", "utf8"}, {"distribution", "zipf"}, {"cardinality", 30}}}}});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("prunedb_gen_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Generator, FullClusteringGivesDisjointRanges) {
  Benchmark b = generate_benchmark(spec_with(1.0));
  const Table& t = b.catalog.at("fact");
  EXPECT_EQ(t.partition_count(), 40u);
  EXPECT_EQ(range_overlap_fraction(t, "id"), 0.0);
}

TEST(Generator, NoClusteringGivesOverlappingRanges) {
  Benchmark b = generate_benchmark(spec_with(0.0));
  EXPECT_GT(range_overlap_fraction(b.catalog.at("fact"), "id"), 0.9);
}

TEST(Generator, OverlapFallsAsClusteringRises) {
  double prev = 2;
  for (double c : {0.0, 0.5, 0.9, 1.0}) {
    double o = range_overlap_fraction(generate_benchmark(spec_with(c)).catalog.at("fact"), "id");
    EXPECT_LE(o, prev) << "clustering " << c;
    prev = o;
  }
}

TEST(Generator, SameSeedIsByteIdentical) {
  fs::path a = scratch("a"), b = scratch("b"), c = scratch("c");
  GeneratorSpec s = spec_with(0.5, 11);
  write_benchmark(s, generate_benchmark(s), a);
  write_benchmark(s, generate_benchmark(s), b);
  GeneratorSpec other = spec_with(0.5, 12);
  write_benchmark(other, generate_benchmark(other), c);
  for (const char* f : {"manifest.json", "fact.csv", "fact.table.json", "dim.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_NE(slurp(a / "fact.csv"), slurp(c / "fact.csv"));
  Catalog reloaded = load_catalog(a);
  EXPECT_EQ(reloaded.at("fact").row_count(), 4000u);
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST(Generator, ColumnDistributions) {
  std::vector<Row> rows = generate_rows(spec_with(1.0));
  std::size_t nulls = 0, top_tag = 0;
  for (const auto& r : rows) {
    if (r[1].is_null()) ++nulls;
    if (r[2].as_string() == "v00") ++top_tag;
  }
  double nf = static_cast<double>(nulls) / static_cast<double>(rows.size());
  EXPECT_NEAR(nf, 0.1, 0.03);
  // Rank 0 of a Zipf(1.1) over 30 values holds far more than the uniform 1/30.
  EXPECT_GT(static_cast<double>(top_tag) / static_cast<double>(rows.size()), 0.15);
}

// Every recorded selectivity equals the oracle's row count over the table size,
// and each manifest query runs to the oracle's answer.
TEST(Generator, ManifestSelectivityIsExactAndQueriesRun) {
  Benchmark b = generate_benchmark(spec_with(0.5));
  std::map<std::string, int> kinds;
  for (const auto& q : b.queries) {
    ++kinds[q.kind];
    PlanPtr p = sql_to_plan(q.sql, b.catalog);
    if (q.kind == "range") {
      auto n = naive_execute(*p, b.catalog).rows.size();
      EXPECT_DOUBLE_EQ(q.selectivity, static_cast<double>(n) / 4000.0) << q.sql;
    }
    QueryResult r = execute(p, b.catalog);
    auto v = testkit::equivalent(p, b.catalog, r.result);
    EXPECT_TRUE(v.ok) << q.sql << ": " << v.why;
  }
  EXPECT_EQ(kinds["range"], 12);
  EXPECT_EQ(kinds["limit"], 12);
  EXPECT_EQ(kinds["topk"], 3);
  EXPECT_EQ(kinds["join"], 4);
}

TEST(GeneratorSpec, RejectsBadInput) {
  nlohmann::json ok = {{"rows", 10}, {"columns", {{{"name", "a"}}}}};
  EXPECT_NO_THROW(GeneratorSpec::from_json(ok));
  auto bad = [&](const char* key, nlohmann::json v) {
    nlohmann::json j = ok;
    j[key] = std::move(v);
    return j;
  };
  EXPECT_THROW(GeneratorSpec::from_json(bad("clustering", 1.5)), InputError);
  EXPECT_THROW(GeneratorSpec::from_json(bad("rows", 0)), InputError);
  EXPECT_THROW(GeneratorSpec::from_json(bad("partitions", 0)), InputError);
  EXPECT_THROW(GeneratorSpec::from_json(bad("cluster_column", "zz")), InputError);
  EXPECT_THROW(GeneratorSpec::from_json(bad("selectivities", {0.0})), InputError);
  EXPECT_THROW(GeneratorSpec::from_json(bad("columns", {{{"name", "a"}, {"distribution", "normal"}}})), InputError);
  EXPECT_THROW(GeneratorSpec::from_json(nlohmann::json{{"rows", 10}}), InputError);
  EXPECT_EQ(GeneratorSpec::from_json(bad("partitions", 3)).partition_rows, 4u);
}
