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

#ifndef RSMC_RNG_HPP_
#define RSMC_RNG_HPP_

#include <cstdint>
#include <string_view>

namespace rsmc {

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

// Counter-based stream keyed by (seed, name). The n-th draw is a pure
// function of (key, n), so streams never depend on thread scheduling or on
// how many values other streams consumed. Distributions are implemented
// here rather than through <random> so results are identical across
// standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name);

  // Child stream keyed by this stream's key and `name`.
  RngStream split(std::string_view name) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n). n > 0.
  std::uint64_t below(std::uint64_t n);
  // Standard normal (Box-Muller).
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rsmc

#endif  // RSMC_RNG_HPP_
