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

// Shared fixtures for the unit tests.

#ifndef RSMC_TESTS_TEST_UTIL_HPP_
#define RSMC_TESTS_TEST_UTIL_HPP_

#include "fs_util.hpp"
#include "rsmc/params.hpp"
#include "rsmc/rng.hpp"

namespace rsmc::testing {

template <typename S = double>
Matrix<S> random_matrix(Index rows, Index cols, RngStream& rng, double scale = 1.0) {
  Matrix<S> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(scale * rng.normal());
  return m;
}

}  // namespace rsmc::testing

#endif  // RSMC_TESTS_TEST_UTIL_HPP_
