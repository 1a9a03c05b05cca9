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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prunedb {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ill-typed expression, cross-type comparison or schema mismatch.
class TypeError : public Error {
 public:
  using Error::Error;
};

/// Unknown table/column or an otherwise unresolvable name.
class BindError : public Error {
 public:
  using Error::Error;
};

/// Bad input supplied by the user: malformed CSV, schema or plan JSON,
/// invalid configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Failure while evaluating a query (integer overflow, unsupported pattern).
class ExecutionError : public Error {
 public:
  using Error::Error;
};

/// Syntax error in SQL text. Offsets are byte offsets into the input, lines
/// and columns are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column,
             std::size_t begin, std::size_t end)
      : Error("syntax error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        begin_(begin),
        end_(end) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  std::size_t begin() const { return begin_; }
  std::size_t end() const { return end_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::size_t begin_;
  std::size_t end_;
};

}  // namespace prunedb
