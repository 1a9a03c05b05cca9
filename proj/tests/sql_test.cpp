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

#include "fixtures.hpp"

using namespace prunedb;
using testkit::Rng;

namespace {

/// Node kinds in pre-order, e.g. "Project(TopK(Filter(Scan)))".
std::string shape(const Plan& p) {
  static const char* names[] = {"Scan", "Filter", "Project", "HashJoin", "GroupBy", "TopK", "Limit"};
  std::string s = names[static_cast<int>(p.kind)];
  if (p.children.empty()) return s;
  s += "(";
  for (std::size_t i = 0; i < p.children.size(); ++i) s += (i ? "," : "") + shape(*p.children[i]);
  return s + ")";
}

Catalog two_tables() {
  Catalog c;
  TableSchema big({{"a", Type::Int64}, {"s", Type::Utf8}});
  TableSchema small({{"a", Type::Int64}, {"label", Type::Utf8}});
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < 10; ++i) rows.push_back({Value(i), Value("x")});
  c.add(build_table("big", big, rows, 5));
  c.add(build_table("small", small, {{Value(1), Value("one")}}, 5));
  return c;
}

}  // namespace

TEST(SqlParse, ExpressionPrecedence) {
  EXPECT_EQ(to_string(*parse_expr("a + b * 2 > 3 OR NOT c = 1 AND d IS NULL")),
            to_string(*ex::or_({ex::gt(ex::add(ex::col("a"), ex::mul(ex::col("b"), ex::lit(Value(2)))), ex::lit(Value(3))),
                                ex::and_({ex::not_(ex::eq(ex::col("c"), ex::lit(Value(1)))), ex::is_null(ex::col("d"))})})));
  EXPECT_TRUE(same_expr(*parse_expr("IF(unit = 'feet', altit * 0.3048, altit)"),
                        *ex::if_(ex::eq(ex::col("unit"), ex::lit(Value("feet"))),
                                 ex::mul(ex::col("altit"), ex::lit(Value(0.3048))), ex::col("altit"))));
  EXPECT_THROW(parse_expr("a > 1 trailing"), ParseError);
}

TEST(SqlParse, LiteralsAndOperators) {
  EXPECT_TRUE(same_expr(*parse_expr("s NOT LIKE 'a%'"), *ex::not_(ex::like(ex::col("s"), "a%"))));
  EXPECT_TRUE(same_expr(*parse_expr("x IN (1, 2.5, 'q', NULL)"),
                        *ex::in_list(ex::col("x"), {Value(1), Value(2.5), Value("q"), Value::null()})));
  EXPECT_TRUE(same_expr(*parse_expr("STARTSWITH(s, 'Al')"), *ex::starts_with(ex::col("s"), "Al")));
  EXPECT_TRUE(same_expr(*parse_expr("'it''s'"), *ex::lit(Value("it's"))));
  EXPECT_TRUE(same_expr(*parse_expr("-3"), *ex::lit(Value(-3))));
  EXPECT_TRUE(same_expr(*parse_expr("t.a -- trailing comment"), *ex::col("t.a")));
}

TEST(SqlParse, ErrorCarriesPosition) {
  try {
    parse_sql("SELEC * FROM t");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.begin(), 0u);
    EXPECT_EQ(e.end(), 5u);
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 1u);
  }
  try {
    parse_sql("SELECT *\nFROM t WHERE a >");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_sql("SELECT * FROM t WHERE s = 'open"), ParseError);
  EXPECT_THROW(parse_sql("SELECT * FROM t LIMIT -1"), ParseError);
  EXPECT_THROW(parse_sql("SELECT * FROM t WHERE SUM(a) > 1"), ParseError);
}

TEST(SqlBind, Errors) {
  Catalog c = two_tables();
  EXPECT_THROW(sql_to_plan("SELECT nope FROM big", c), BindError);
  EXPECT_THROW(sql_to_plan("SELECT * FROM missing", c), BindError);
  EXPECT_THROW(sql_to_plan("SELECT a FROM big JOIN small ON big.a = small.a", c), BindError);  // ambiguous
  EXPECT_THROW(sql_to_plan("SELECT s, COUNT(*) FROM big GROUP BY a", c), BindError);
  // Types are checked when the plan is prepared, so JSON plans get the same check.
  EXPECT_THROW(prepare(sql_to_plan("SELECT * FROM big WHERE s + 1 > 2", c), c, {}), TypeError);
}

TEST(SqlPlan, Shapes) {
  Catalog c = two_tables();
  auto sh = [&](const std::string& sql) { return shape(*sql_to_plan(sql, c)); };
  EXPECT_EQ(sh("SELECT * FROM big"), "Scan");
  EXPECT_EQ(sh("SELECT * FROM big WHERE a > 1 LIMIT 2"), "Limit(Filter(Scan))");
  EXPECT_EQ(sh("SELECT * FROM big WHERE TRUE"), "Scan");
  EXPECT_EQ(sh("SELECT a FROM big ORDER BY a DESC LIMIT 3"), "Project(TopK(Scan))");
  EXPECT_EQ(sh("SELECT a FROM big ORDER BY a LIMIT 3 OFFSET 2"), "Project(Limit(TopK(Scan)))");
  EXPECT_EQ(sh("SELECT a FROM big ORDER BY a LIMIT 0"), "Project(Limit(TopK(Scan)))");
  EXPECT_EQ(sh("SELECT s, COUNT(*) FROM big GROUP BY s ORDER BY s LIMIT 1"), "Project(TopK(GroupBy(Scan)))");
  // Inner joins build on the smaller table; conjuncts go to their scans.
  EXPECT_EQ(sh("SELECT * FROM big b JOIN small s ON b.a = s.a WHERE b.a > 1 AND s.label = 'one'"),
            "Project(HashJoin(Filter(Scan),Filter(Scan)))");
  PlanPtr j = sql_to_plan("SELECT * FROM big b JOIN small s ON b.a = s.a", c);
  EXPECT_EQ(j->children[0]->children[0]->table, "small");
  // A left join builds on its left input; right-side conjuncts stay above the join.
  PlanPtr l = sql_to_plan("SELECT * FROM big b LEFT JOIN small s ON b.a = s.a WHERE s.label IS NULL", c);
  EXPECT_EQ(shape(*l), "Project(Filter(HashJoin(Scan,Scan)))");
  EXPECT_EQ(l->children[0]->children[0]->children[0]->table, "big");
  PlanPtr k = sql_to_plan("SELECT a FROM big ORDER BY a LIMIT 3 OFFSET 2", c);
  EXPECT_EQ(k->children[0]->children[0]->k, 5u);
}

TEST(SqlPlan, AggregateNamesAndAliases) {
  Catalog c = two_tables();
  PlanPtr p = sql_to_plan("SELECT s, COUNT(*), SUM(a) AS total FROM big GROUP BY s ORDER BY total DESC", c);
  ASSERT_EQ(p->kind, PlanKind::Project);
  EXPECT_EQ(p->items[1].name, "count(*)");
  EXPECT_EQ(p->items[2].name, "total");
  const Plan& g = *p->children[0]->children[0];
  ASSERT_EQ(g.kind, PlanKind::GroupBy);
  EXPECT_EQ(g.aggregates.size(), 2u);
}

// Random statements survive parse -> plan -> JSON -> plan unchanged and run
// identically afterwards.
TEST(SqlProperty, PlanJsonRoundTrip) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed + 31);
    Catalog c = testkit::random_catalog(rng, {6, 10, 10});
    std::string sql = testkit::random_query(rng);
    PlanPtr p = sql_to_plan(sql, c);
    nlohmann::json j = plan_to_json(*p);
    PlanPtr back = plan_from_json(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(plan_to_json(*back), j) << sql;
    auto a = execute(p, c).result, b = execute(back, c).result;
    ASSERT_EQ(a.rows.size(), b.rows.size()) << sql;
    for (std::size_t i = 0; i < a.rows.size(); ++i) ASSERT_TRUE(testkit::rows_equal(a.rows[i], b.rows[i])) << sql;
  }
}

TEST(SqlProperty, PrintedPredicatesReparse) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(seed);
    ExprPtr e = parse_expr(testkit::random_predicate(rng, testkit::cols_t1("t"), 3));
    ExprPtr again = parse_expr(to_string(*e));
    ASSERT_TRUE(same_expr(*e, *again)) << to_string(*e) << " vs " << to_string(*again);
  }
}

TEST(PlanJson, RejectsMalformedPlans) {
  EXPECT_THROW(plan_from_json(nlohmann::json{{"op", "scan"}}), InputError);
  EXPECT_THROW(plan_from_json(nlohmann::json{{"op", "teleport"}}), InputError);
  EXPECT_THROW(plan_from_json(nlohmann::json::array()), InputError);
}
