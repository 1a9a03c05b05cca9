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

// prunedb: ingest CSV tables, run queries with pruning toggles, generate
// clustered benchmarks and summarize pruning statistics.
//
// Exit codes: 0 ok, 1 user error (bad input, parse/bind/type errors,
// query errors), 2 internal error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "prunedb/prunedb.hpp"

namespace fs = std::filesystem;
using namespace prunedb;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed JSON in '" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write '" + path + "'");
}

ExecConfig config_from(const std::vector<std::string>& disable, std::size_t workers, const std::string& strategy,
                       std::uint64_t seed, bool no_init) {
  ExecConfig c;
  for (const auto& d : disable) {
    if (d == "all") c = ExecConfig::none();
    else if (d == "filter") c.filter_pruning = false;
    else if (d == "limit") c.limit_pruning = false;
    else if (d == "join") c.join_pruning = false;
    else if (d == "topk") c.topk_pruning = false;
    else throw InputError("unknown technique '" + d + "' (expected filter, limit, join, topk or all)");
  }
  if (workers == 0) throw InputError("--workers must be >= 1");
  c.workers = workers;
  c.seed = seed;
  c.topk_init_boundary = !no_init;
  if (strategy == "full_sort") c.topk_strategy = ScanOrderStrategy::FullSort;
  else if (strategy == "none_random") c.topk_strategy = ScanOrderStrategy::NoneRandom;
  else throw InputError("unknown strategy '" + strategy + "' (expected full_sort or none_random)");
  return c;
}

void print_rows(std::ostream& out, const ResultSet& r) {
  std::vector<ColumnDef> cols = r.schema;
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << csv_escape(cols[c].name);
  out << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      out << (row[c].is_null() ? std::string("NULL") : csv_escape(row[c].to_string()));
    }
    out << "\n";
  }
}

struct QueryArgs {
  std::string sql, plan_file, emit_plan, stats_file, catalog = "catalog", strategy = "full_sort";
  std::vector<std::string> disable;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  bool explain = false, no_init = false, quiet = false;
};

int run_query(const QueryArgs& a) {
  Catalog catalog = load_catalog(a.catalog);
  if (a.sql.empty() == a.plan_file.empty()) throw InputError("query needs exactly one of --sql or --plan");
  PlanPtr plan = a.sql.empty() ? plan_from_json(read_json(a.plan_file)) : sql_to_plan(a.sql, catalog);
  if (!a.emit_plan.empty()) write_text(a.emit_plan, plan_to_json(*plan).dump(2) + "\n");
  ExecConfig config = config_from(a.disable, a.workers, a.strategy, a.seed, a.no_init);
  PreparedQuery prepared = prepare(plan, catalog, config);
  if (a.explain) {
    std::cout << explain(prepared);
    return 0;
  }
  QueryResult r = execute(prepared);
  r.stats.query = a.sql.empty() ? a.plan_file : a.sql;
  if (!a.quiet) print_rows(std::cout, r.result);
  if (!a.stats_file.empty()) write_text(a.stats_file, query_stats_to_json(r.stats).dump(2) + "\n");
  return 0;
}

int run_ingest(const std::string& table, const std::string& csv, const std::string& schema_file,
               std::size_t partition_rows, const std::vector<std::string>& sort_by, const std::string& catalog,
               const std::string& null_token) {
  TableSchema schema = TableSchema::from_json(read_json(schema_file));
  std::vector<Row> rows = ingest_csv(csv, schema, null_token);
  Table t = build_table(table, schema, std::move(rows), partition_rows, sort_by);
  save_table(t, catalog);
  std::cout << "ingested " << t.row_count() << " rows into " << t.partition_count() << " partitions of '" << table
            << "'\n";
  return 0;
}

int run_bench(const std::string& spec_file, const std::string& out_dir, bool execute_queries, std::size_t workers) {
  GeneratorSpec spec = GeneratorSpec::from_json(read_json(spec_file));
  Benchmark b = generate_benchmark(spec);
  fs::create_directories(out_dir);
  write_benchmark(spec, b, out_dir);
  std::cout << "wrote " << b.catalog.names().size() << " tables and " << b.queries.size() << " queries to " << out_dir
            << "\n";
  if (!execute_queries) return 0;
  fs::path stats_dir = fs::path(out_dir) / "stats";
  fs::create_directories(stats_dir);
  ExecConfig config;
  config.workers = workers;
  for (std::size_t i = 0; i < b.queries.size(); ++i) {
    QueryResult r = execute(sql_to_plan(b.queries[i].sql, b.catalog), b.catalog, config);
    r.stats.query = b.queries[i].sql;
    char name[32];
    std::snprintf(name, sizeof name, "q%04zu.json", i);
    write_text((stats_dir / name).string(), query_stats_to_json(r.stats).dump(2) + "\n");
  }
  std::cout << "wrote per-query stats to " << stats_dir.string() << "\n";
  return 0;
}

int run_report(const std::string& stats_dir, const std::string& out, const std::string& csv) {
  std::vector<fs::path> files;
  if (!fs::is_directory(stats_dir)) throw InputError("'" + stats_dir + "' is not a directory");
  for (const auto& e : fs::directory_iterator(stats_dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<QueryStats> workload;
  for (const auto& f : files) workload.push_back(query_stats_from_json(read_json(f.string())));
  WorkloadReport r = flow_report(workload);
  write_text(out, report_to_json(r).dump(2) + "\n");
  if (!csv.empty()) write_text(csv, distribution_csv(r));
  std::cout << "report over " << r.queries << " queries: " << r.partitions_pruned << " of " << r.partitions_total
            << " partitions pruned\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prunedb: partition pruning query engine"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Load a CSV file into the catalog as micro-partitions");
  std::string table, csv, schema_file, catalog_dir = "catalog", null_token;
  std::size_t partition_rows = 0;
  std::vector<std::string> sort_by;
  ingest->add_option("--table", table, "Table name")->required();
  ingest->add_option("--csv", csv, "CSV file with a header row")->required();
  ingest->add_option("--schema", schema_file, "Schema JSON {\"columns\": [{name, type}]}")->required();
  ingest->add_option("--partition-rows", partition_rows, "Rows per micro-partition")->required();
  ingest->add_option("--sort-by", sort_by, "Sort columns before partitioning")->delimiter(',');
  ingest->add_option("--catalog", catalog_dir, "Catalog directory");
  ingest->add_option("--null-token", null_token, "Unquoted CSV cell read as NULL");

  auto* query = app.add_subcommand("query", "Run a SQL query or a JSON plan");
  QueryArgs qa;
  query->add_option("--sql", qa.sql, "Query text");
  query->add_option("--plan", qa.plan_file, "Plan JSON file (instead of --sql)");
  query->add_option("--emit-plan", qa.emit_plan, "Write the plan as JSON");
  query->add_flag("--explain", qa.explain, "Print the annotated plan without executing");
  query->add_option("--disable", qa.disable, "Techniques to disable: filter,limit,join,topk or all")->delimiter(',');
  query->add_option("--workers", qa.workers, "Scan worker threads");
  query->add_option("--stats", qa.stats_file, "Write query statistics JSON");
  query->add_option("--seed", qa.seed, "Seed for randomized scan orders");
  query->add_option("--strategy", qa.strategy, "Top-k scan order: full_sort or none_random");
  query->add_flag("--no-init-boundary", qa.no_init, "Skip top-k boundary initialization");
  query->add_flag("--quiet", qa.quiet, "Do not print result rows");
  query->add_option("--catalog", qa.catalog, "Catalog directory");

  auto* bench = app.add_subcommand("bench", "Generate a clustered benchmark dataset and query manifest");
  std::string spec_file, out_dir;
  bool no_run = false;
  std::size_t bench_workers = 1;
  bench->add_option("--spec", spec_file, "Generator spec JSON")->required();
  bench->add_option("--out", out_dir, "Output directory")->required();
  bench->add_flag("--no-run", no_run, "Only generate; do not execute the manifest");
  bench->add_option("--workers", bench_workers, "Scan worker threads");

  auto* report = app.add_subcommand("report", "Summarize a directory of query statistics");
  std::string stats_dir, report_out, csv_out;
  report->add_option("--stats-dir", stats_dir, "Directory of per-query stats JSON")->required();
  report->add_option("--out", report_out, "Report JSON file")->required();
  report->add_option("--csv", csv_out, "Optional per-technique ratio CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return run_ingest(table, csv, schema_file, partition_rows, sort_by, catalog_dir, null_token);
    if (*query) return run_query(qa);
    if (*bench) return run_bench(spec_file, out_dir, !no_run, bench_workers);
    if (*report) return run_report(stats_dir, report_out, csv_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (bytes " << e.begin() << "-" << e.end() << ")\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
