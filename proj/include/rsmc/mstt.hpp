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

// Multi-scale temporal encoder: hidden projection, two multi-head masked
// attention branches (banded local window and periodic sparse sampling),
// ReLU concatenation fusion, and attention pooling over time.

#ifndef RSMC_MSTT_HPP_
#define RSMC_MSTT_HPP_

#include <cstdint>
#include <vector>

#include "rsmc/ops.hpp"

namespace rsmc {

// T x T additive masks: 0 where attention is allowed, kMaskedLogit elsewhere.
// Local: |i - j| <= w. Sparse: j == i or j mod p == 0 (0-based).
template <typename S = double>
Matrix<S> build_local_mask(Index time, Index window);
template <typename S = double>
Matrix<S> build_sparse_mask(Index time, Index period);

// max(1, T / 4).
Index default_sparse_period(Index time);

struct MsttShape {
  Index features = 0;
  Index hidden = 64;
  Index heads = 8;
  Index local_window = 2;
  Index sparse_period = 1;
  bool untied_branches = false;
  bool enabled = true;  // false: fused = ReLU(x W_p^T), pooling kept
};

template <typename S>
void add_mstt_params(ParamStore<S>& store, std::uint64_t seed, const MsttShape& shape);

struct TemporalOutput {
  Var fused;      // (B*T) x H
  Var attention;  // B x T, rows sum to 1
  Var pooled;     // B x H
};

template <typename S>
TemporalOutput mstt_forward(Tape<S>& tape, ParamStore<S>& store, Var x, Index batch, Index time,
                            const MsttShape& shape,
                            std::vector<Matrix<S>>* local_weights = nullptr,
                            std::vector<Matrix<S>>* sparse_weights = nullptr);

}  // namespace rsmc

#endif  // RSMC_MSTT_HPP_
