// Copyright 2026 The EcgNode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ECGNODE_ERROR_H_
#define ECGNODE_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecgnode {

// Input data could not be parsed or violates a documented file format.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string &source, std::size_t line,
             const std::string &what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  explicit ParseError(const std::string &what) : std::runtime_error(what) {}

  // 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Well-formed input that is inconsistent with the operation (wrong rate,
// mismatched shapes, label-set mismatch...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The process network cannot make progress.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ecgnode

#endif  // ECGNODE_ERROR_H_
