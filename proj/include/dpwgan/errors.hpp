// Copyright 2026 The dpwgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <stdexcept>
#include <string>

namespace dpwgan {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside its mathematical domain (negative std, delta not in (0,1)).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents: bad magic, truncated payload, bad CSV.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain rule (ICD9 code out of range).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed to converge or produced non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Config file problems; carries the offending line when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// A training procedure could not reach its quality gate.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpwgan
