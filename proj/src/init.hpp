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

// Deterministic parameter initialisers. Each tensor draws from its own
// stream keyed by (seed, path), so values do not depend on creation order.

#ifndef RSMC_SRC_INIT_HPP_
#define RSMC_SRC_INIT_HPP_

#include <cmath>
#include <string>

#include "rsmc/params.hpp"
#include "rsmc/rng.hpp"

namespace rsmc::init {

// Glorot-uniform for a rows x cols weight (out x in).
template <typename S>
Matrix<S> glorot(Index rows, Index cols, std::uint64_t seed, const std::string& path) {
  RngStream rng(seed, "init/" + path);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix<S> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>((2.0 * rng.uniform() - 1.0) * limit);
  return m;
}

template <typename S>
Matrix<S> zeros(Index rows, Index cols) {
  return Matrix<S>::Zero(rows, cols);
}

template <typename S>
Matrix<S> ones(Index rows, Index cols) {
  return Matrix<S>::Ones(rows, cols);
}

template <typename S>
Matrix<S> identity(Index n) {
  return Matrix<S>::Identity(n, n);
}

}  // namespace rsmc::init

#endif  // RSMC_SRC_INIT_HPP_
