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

#include "rsmc/mstt.hpp"

#include <algorithm>
#include <string>

#include "init.hpp"

namespace rsmc {
namespace {

template <typename S>
void check_shape(const MsttShape& shape) {
  if (shape.hidden <= 0 || shape.heads <= 0 || shape.hidden % shape.heads != 0) {
    throw PreconditionError("hidden size " + std::to_string(shape.hidden) +
                            " is not divisible by head count " + std::to_string(shape.heads));
  }
  if (shape.local_window < 0) throw PreconditionError("local window must be >= 0");
  if (shape.sparse_period < 1) throw PreconditionError("sparse period must be >= 1");
}

std::string branch_prefix(const MsttShape& shape, const char* branch) {
  return shape.untied_branches ? std::string("mstt/") + branch + "/" : std::string("mstt/");
}

template <typename S>
void add_branch(ParamStore<S>& store, std::uint64_t seed, const std::string& prefix, Index h) {
  for (const char* name : {"W_q", "W_k", "W_v", "W_o"}) {
    const std::string path = prefix + name;
    store.add(path, init::glorot<S>(h, h, seed, path));
  }
}

template <typename S>
Var branch(Tape<S>& tape, ParamStore<S>& store, const std::string& prefix, Var h, const Matrix<S>& mask,
           Index batch, Index heads, std::vector<Matrix<S>>* weights) {
  Var q = ops::linear(tape, h, tape.parameter(store.at(prefix + "W_q")));
  Var k = ops::linear(tape, h, tape.parameter(store.at(prefix + "W_k")));
  Var v = ops::linear(tape, h, tape.parameter(store.at(prefix + "W_v")));
  Var att = ops::multihead_attention(tape, q, k, v, mask, batch, heads, weights);
  return ops::linear(tape, att, tape.parameter(store.at(prefix + "W_o")));
}

}  // namespace

template <typename S>
Matrix<S> build_local_mask(Index time, Index window) {
  if (time < 1) throw PreconditionError("mask length T must be >= 1");
  if (window < 0) throw PreconditionError("local window must be >= 0");
  Matrix<S> m(time, time);
  for (Index i = 0; i < time; ++i) {
    for (Index j = 0; j < time; ++j) {
      m(i, j) = std::abs(i - j) <= window ? S(0) : static_cast<S>(kMaskedLogit);
    }
  }
  return m;
}

template <typename S>
Matrix<S> build_sparse_mask(Index time, Index period) {
  if (time < 1) throw PreconditionError("mask length T must be >= 1");
  if (period < 1) throw PreconditionError("sparse period must be >= 1");
  Matrix<S> m(time, time);
  for (Index i = 0; i < time; ++i) {
    for (Index j = 0; j < time; ++j) {
      m(i, j) = (j == i || j % period == 0) ? S(0) : static_cast<S>(kMaskedLogit);
    }
  }
  return m;
}

Index default_sparse_period(Index time) { return std::max<Index>(1, time / 4); }

template <typename S>
void add_mstt_params(ParamStore<S>& store, std::uint64_t seed, const MsttShape& shape) {
  check_shape<S>(shape);
  const Index h = shape.hidden;
  store.add("mstt/W_p", init::glorot<S>(h, shape.features, seed, "mstt/W_p"));
  if (shape.enabled) {
    add_branch(store, seed, branch_prefix(shape, "local"), h);
    if (shape.untied_branches) add_branch(store, seed, branch_prefix(shape, "global"), h);
    store.add("mstt/W_f", init::glorot<S>(h, 2 * h, seed, "mstt/W_f"));
  }
  store.add("mstt/W_att", init::glorot<S>(h, h, seed, "mstt/W_att"));
  store.add("mstt/v_att", init::glorot<S>(1, h, seed, "mstt/v_att"));
}

template <typename S>
TemporalOutput mstt_forward(Tape<S>& tape, ParamStore<S>& store, Var x, Index batch, Index time,
                            const MsttShape& shape, std::vector<Matrix<S>>* local_weights,
                            std::vector<Matrix<S>>* sparse_weights) {
  check_shape<S>(shape);
  if (time < 1) throw PreconditionError("mstt_forward: T must be >= 1");
  if (tape.value(x).rows() != batch * time) {
    throw DimensionError("mstt_forward: " + std::to_string(tape.value(x).rows()) +
                         " rows do not match batch " + std::to_string(batch) + " x time " +
                         std::to_string(time));
  }
  Var h = ops::linear(tape, x, tape.parameter(store.at("mstt/W_p")));
  Var fused;
  if (shape.enabled) {
    const Matrix<S> local_mask = build_local_mask<S>(time, shape.local_window);
    const Matrix<S> sparse_mask = build_sparse_mask<S>(time, shape.sparse_period);
    Var local = branch(tape, store, branch_prefix(shape, "local"), h, local_mask, batch, shape.heads,
                       local_weights);
    Var global = branch(tape, store, branch_prefix(shape, "global"), h, sparse_mask, batch,
                        shape.heads, sparse_weights);
    fused = ops::relu(tape, ops::linear(tape, ops::concat_cols(tape, local, global),
                                        tape.parameter(store.at("mstt/W_f"))));
  } else {
    fused = ops::relu(tape, h);
  }
  Var score = ops::linear(tape, ops::tanh(tape, ops::linear(tape, fused, tape.parameter(store.at("mstt/W_att")))),
                          tape.parameter(store.at("mstt/v_att")));
  Var attention = ops::softmax_rows(tape, ops::reshape(tape, score, batch, time));
  return {fused, attention, ops::weighted_segment_sum(tape, attention, fused)};
}

#define RSMC_INSTANTIATE(S)                                                                          \
  template Matrix<S> build_local_mask<S>(Index, Index);                                              \
  template Matrix<S> build_sparse_mask<S>(Index, Index);                                             \
  template void add_mstt_params<S>(ParamStore<S>&, std::uint64_t, const MsttShape&);                 \
  template TemporalOutput mstt_forward<S>(Tape<S>&, ParamStore<S>&, Var, Index, Index,               \
                                          const MsttShape&, std::vector<Matrix<S>>*,                 \
                                          std::vector<Matrix<S>>*);
RSMC_INSTANTIATE(float)
RSMC_INSTANTIATE(double)
#undef RSMC_INSTANTIATE

}  // namespace rsmc
