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

// Region-aware spatial encoder. Per time step every electrode's band vector
// (D = 5) is projected to query/key/value; a region-mean branch and a
// within-region best-match branch are blended by a learned gate, pooled over
// electrodes, projected, added back to the input and layer-normalised over
// the flattened N*D feature vector. A sigmoid head over that vector,
// averaged over time, gives per-sample spatial attention weights.
//
// Shapes: x is (B*T) x F with F = N*D electrode-major; the (B*T*N) x D view
// of the same buffer has row (b*T + t)*N + n for electrode n.

#ifndef RSMC_RGRM_HPP_
#define RSMC_RGRM_HPP_

#include <cstdint>
#include <vector>

#include "rsmc/ops.hpp"
#include "rsmc/topology.hpp"

namespace rsmc {

// enabled = false registers only the spatial attention head.
template <typename S>
void add_rgrm_params(ParamStore<S>& store, std::uint64_t seed, Index bands, Index features,
                     bool enabled = true);

// Region mean of v broadcast back to each electrode of the region.
// v: (G*N) x D, processed in blocks of N rows.
template <typename S>
Var region_mean(Tape<S>& tape, Var v, const RegionPartition& partition);

// For every row of the (G*N) x D query block, the row index (into the same
// block layout) of the same-region electrode k != i maximising
// q_i . k_k / sqrt(d_k). Ties go to the smallest electrode index; a
// single-electrode region selects itself.
template <typename S>
std::vector<Index> region_sparse_partners(const Matrix<S>& q, const Matrix<S>& k,
                                          const RegionPartition& partition, double d_k);

struct SpatialOutput {
  Var enhanced;   // (B*T) x F
  Var attention;  // B x F, entries in (0, 1)
};

template <typename S>
SpatialOutput rgrm_forward(Tape<S>& tape, ParamStore<S>& store, Var x, Index batch, Index time,
                           const RegionPartition& partition, bool enabled = true);

// sigmoid(x W_a^T + b_a) averaged over the T steps of each sample.
template <typename S>
Var spatial_attention(Tape<S>& tape, ParamStore<S>& store, Var enhanced, Index time);

}  // namespace rsmc

#endif  // RSMC_RGRM_HPP_
