// Copyright 2026 The rsmc Authors. All Rights Reserved.
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

#ifndef RSMC_ERROR_HPP_
#define RSMC_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsmc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Unknown electrode label, subject id, parameter path, ...
class LookupError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was violated by its inputs.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. `offset` is the byte position where reading failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration key or value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf reached a loss or gradient during training. fold is -1 when
// no LOSO fold is involved.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, int fold = -1)
      : Error(what), fold_(fold) {}
  int fold() const noexcept { return fold_; }

 private:
  int fold_;
};

}  // namespace rsmc

#endif  // RSMC_ERROR_HPP_
