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

#include "prunedb/catalog_io.hpp"
#include "prunedb/error.hpp"
#include "prunedb/executor.hpp"
#include "prunedb/expr.hpp"
#include "prunedb/expr_json.hpp"
#include "prunedb/generator.hpp"
#include "prunedb/join_pruning.hpp"
#include "prunedb/limit_planner.hpp"
#include "prunedb/meta_eval.hpp"
#include "prunedb/naive_executor.hpp"
#include "prunedb/partition_store.hpp"
#include "prunedb/plan.hpp"
#include "prunedb/pruning_tree.hpp"
#include "prunedb/query_stats.hpp"
#include "prunedb/sql.hpp"
#include "prunedb/stats_report.hpp"
#include "prunedb/topk.hpp"
#include "prunedb/value.hpp"
