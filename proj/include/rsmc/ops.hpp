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

// Differentiable kernels recorded on a Tape. Every op validates shapes,
// computes its forward value eagerly and registers the matching backward.
//
// Batched tensors are carried as 2-D row-major matrices: a (B, T, F) batch is
// a (B*T) x F matrix whose row b*T + t is time step t of sample b.

#ifndef RSMC_OPS_HPP_
#define RSMC_OPS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "rsmc/rng.hpp"
#include "rsmc/tape.hpp"

namespace rsmc {


// Additive-mask value standing in for -inf. Entries at or below
// kMaskThreshold (including a literal -inf) are excluded from the softmax
// sum entirely, so their weight is exactly zero.
inline constexpr double kMaskedLogit = -1.0e30;
inline constexpr double kMaskThreshold = -1.0e29;

template <typename S>
bool is_masked(S m) {
  return !(m > static_cast<S>(kMaskThreshold));
}

namespace ops {

// a * b
template <typename S>
Var matmul(Tape<S>& t, Var a, Var b);
// x * W^T
template <typename S>
Var linear(Tape<S>& t, Var x, Var w);
// x * W^T + b, with b a 1 x out row.
template <typename S>
Var linear(Tape<S>& t, Var x, Var w, Var b);

template <typename S>
Var add(Tape<S>& t, Var a, Var b);
template <typename S>
Var sub(Tape<S>& t, Var a, Var b);
// x + row broadcast over every row of x.
template <typename S>
Var add_row(Tape<S>& t, Var x, Var row);
template <typename S>
Var scale(Tape<S>& t, Var x, S factor);
// gate * a + (1 - gate) * b, gate 1x1.
template <typename S>
Var blend(Tape<S>& t, Var gate, Var a, Var b);

template <typename S>
Var sigmoid(Tape<S>& t, Var x);
template <typename S>
Var tanh(Tape<S>& t, Var x);
template <typename S>
Var relu(Tape<S>& t, Var x);

// Row-wise normalisation to zero mean / unit variance, then gain and bias
// (both 1 x cols). Requires cols >= 2.
template <typename S>
Var layer_norm(Tape<S>& t, Var x, Var gain, Var bias, S eps);

// Column-wise batch normalisation. Training mode normalises with batch
// statistics and updates the running estimates in place; eval mode uses
// the running estimates.
template <typename S>
Var batch_norm(Tape<S>& t, Var x, Var gamma, Var beta, Matrix<S>& running_mean,
               Matrix<S>& running_var, S momentum, S eps, bool training);

template <typename S>
Var softmax_rows(Tape<S>& t, Var x);
template <typename S>
Var log_softmax_rows(Tape<S>& t, Var x);

// Inverted dropout: survivors scaled by 1/(1-rate) when training,
// identity otherwise. rate in [0, 1).
template <typename S>
Var dropout(Tape<S>& t, Var x, double rate, bool training, RngStream& rng);

template <typename S>
Var reshape(Tape<S>& t, Var x, Index rows, Index cols);
template <typename S>
Var concat_cols(Tape<S>& t, Var a, Var b);
template <typename S>
Var gather_rows(Tape<S>& t, Var x, std::vector<Index> rows);
// Mean of consecutive row groups: (G*k) x c -> G x c.
template <typename S>
Var segment_mean(Tape<S>& t, Var x, Index group);
// Each row repeated `times` times consecutively: G x c -> (G*times) x c.
template <typename S>
Var repeat_rows(Tape<S>& t, Var x, Index times);
// z_b = sum_t w(b, t) * x(b*T + t): weights B x T, x (B*T) x H -> B x H.
template <typename S>
Var weighted_segment_sum(Tape<S>& t, Var weights, Var x);

template <typename S>
Var sum(Tape<S>& t, Var x);
template <typename S>
Var mean(Tape<S>& t, Var x);

// -mean_i logp(i, labels[i]).
template <typename S>
Var nll_loss(Tape<S>& t, Var logp, std::span<const int> labels);

// Row r of the result is x.row(r) * mats[row_group[r]].
template <typename S>
Var grouped_matmul(Tape<S>& t, Var x, std::span<const int> row_group,
                   const std::vector<Var>& mats);

// Row-wise masked softmax of logits + mask (mask broadcast per T x T block
// when logits has more rows than mask). Throws PreconditionError on a row
// with no admissible entry.
template <typename S>
Matrix<S> masked_softmax(const Matrix<S>& logits, const Matrix<S>& mask);

template <typename S>
struct AttentionResult {
  Var output;
  Matrix<S> weights;
};

// Single-head attention: softmax(Q K^T / sqrt(d_k) + M) V.
template <typename S>
AttentionResult<S> masked_softmax_attention(Tape<S>& t, Var q, Var k, Var v,
                                            const Matrix<S>& mask, double d_k);

// Multi-head masked attention over a (B*T) x H batch. Head h uses columns
// [h*d, (h+1)*d) of q, k and v with d = H / heads, and writes the same
// columns of the output. When `weights_out` is non-null it receives the
// B*heads attention matrices (index b*heads + h).
template <typename S>
Var multihead_attention(Tape<S>& t, Var q, Var k, Var v, const Matrix<S>& mask,
                        Index batch, Index heads, std::vector<Matrix<S>>* weights_out = nullptr);

}  // namespace ops
}  // namespace rsmc

#endif  // RSMC_OPS_HPP_
