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

#include "rsmc/rgrm.hpp"

#include <cmath>

#include "init.hpp"

namespace rsmc {
namespace {

constexpr double kLayerNormEps = 1e-5;

void check_partition_rows(Index rows, const RegionPartition& partition, const char* who) {
  const Index n = partition.electrode_count;
  if (n <= 0 || rows % n != 0) {
    throw DimensionError(std::string(who) + ": " + std::to_string(rows) +
                         " rows are not a multiple of " + std::to_string(n) + " electrodes");
  }
}

}  // namespace

template <typename S>
void add_rgrm_params(ParamStore<S>& store, std::uint64_t seed, Index bands, Index features,
                     bool enabled) {
  if (enabled) {
    for (const char* name : {"rgrm/W_q", "rgrm/W_k", "rgrm/W_v"}) {
      store.add(name, init::glorot<S>(bands, bands, seed, name));
    }
    store.add("rgrm/alpha", init::zeros<S>(1, 1));
    store.add("rgrm/W_o", init::glorot<S>(bands, bands, seed, "rgrm/W_o"));
    store.add("rgrm/b_o", init::zeros<S>(1, bands));
    store.add("rgrm/ln_gain", init::ones<S>(1, features));
    store.add("rgrm/ln_bias", init::zeros<S>(1, features));
  }
  store.add("rgrm/W_a", init::glorot<S>(features, features, seed, "rgrm/W_a"));
  store.add("rgrm/b_a", init::zeros<S>(1, features));
}

template <typename S>
Var region_mean(Tape<S>& tape, Var v, const RegionPartition& partition) {
  const Matrix<S>& in = tape.value(v);
  check_partition_rows(in.rows(), partition, "region_mean");
  const Index n = partition.electrode_count;
  const Index blocks = in.rows() / n;
  Matrix<S> out(in.rows(), in.cols());
  for (Index g = 0; g < blocks; ++g) {
    for (const auto& region : partition.regions) {
      Eigen::Matrix<S, 1, Eigen::Dynamic> m = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(in.cols());
      for (int e : region.electrodes) m += in.row(g * n + e);
      m /= static_cast<S>(region.electrodes.size());
      for (int e : region.electrodes) out.row(g * n + e) = m;
    }
  }
  return tape.record(std::move(out), {v}, [v, partition, n, blocks](Tape<S>& t, std::uint32_t self) {
    if (!t.requires_grad(v)) return;
    const Matrix<S> go = t.grad(self);
    Matrix<S>& gi = t.grad(v);
    for (Index g = 0; g < blocks; ++g) {
      for (const auto& region : partition.regions) {
        Eigen::Matrix<S, 1, Eigen::Dynamic> m = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(go.cols());
        for (int e : region.electrodes) m += go.row(g * n + e);
        m /= static_cast<S>(region.electrodes.size());
        for (int e : region.electrodes) gi.row(g * n + e) += m;
      }
    }
  });
}

template <typename S>
std::vector<Index> region_sparse_partners(const Matrix<S>& q, const Matrix<S>& k,
                                          const RegionPartition& partition, double d_k) {
  if (q.rows() != k.rows() || q.cols() != k.cols()) {
    throw DimensionError("region_sparse_partners: query and key shapes differ");
  }
  check_partition_rows(q.rows(), partition, "region_sparse_partners");
  const Index n = partition.electrode_count;
  const S inv_scale = static_cast<S>(1.0 / std::sqrt(d_k));
  std::vector<Index> partner(static_cast<std::size_t>(q.rows()));
  for (Index g = 0; g < q.rows() / n; ++g) {
    for (const auto& region : partition.regions) {
      for (int i : region.electrodes) {
        const Index row_i = g * n + i;
        Index best = row_i;
        S best_score = S(0);
        bool found = false;
        for (int j : region.electrodes) {  // ascending, so ">" keeps the smallest tied index
          if (j == i) continue;
          const S score = q.row(row_i).dot(k.row(g * n + j)) * inv_scale;
          if (!found || score > best_score) {
            best = g * n + j;
            best_score = score;
            found = true;
          }
        }
        partner[static_cast<std::size_t>(row_i)] = best;
      }
    }
  }
  return partner;
}

template <typename S>
Var spatial_attention(Tape<S>& tape, ParamStore<S>& store, Var enhanced, Index time) {
  Var w = tape.parameter(store.at("rgrm/W_a"));
  Var b = tape.parameter(store.at("rgrm/b_a"));
  return ops::segment_mean(tape, ops::sigmoid(tape, ops::linear(tape, enhanced, w, b)), time);
}

template <typename S>
SpatialOutput rgrm_forward(Tape<S>& tape, ParamStore<S>& store, Var x, Index batch, Index time,
                           const RegionPartition& partition, bool enabled) {
  const Index rows = tape.value(x).rows();
  const Index features = tape.value(x).cols();
  const Index n = partition.electrode_count;
  if (rows != batch * time || n <= 0 || features % n != 0) {
    throw DimensionError("rgrm_forward: input " + std::to_string(rows) + "x" + std::to_string(features) +
                         " does not match batch " + std::to_string(batch) + " x time " +
                         std::to_string(time) + " over " + std::to_string(n) + " electrodes");
  }
  if (!enabled) return {x, spatial_attention(tape, store, x, time)};

  const Index bands = features / n;
  Var xe = ops::reshape(tape, x, rows * n, bands);
  Var q = ops::linear(tape, xe, tape.parameter(store.at("rgrm/W_q")));
  Var k = ops::linear(tape, xe, tape.parameter(store.at("rgrm/W_k")));
  Var v = ops::linear(tape, xe, tape.parameter(store.at("rgrm/W_v")));

  Var continuous = region_mean(tape, v, partition);
  Var sparse = ops::gather_rows(
      tape, v, region_sparse_partners(tape.value(q), tape.value(k), partition, static_cast<double>(bands)));
  Var gate = ops::sigmoid(tape, tape.parameter(store.at("rgrm/alpha")));
  Var fused = ops::blend(tape, gate, continuous, sparse);

  Var pooled = ops::segment_mean(tape, fused, n);
  Var projected = ops::linear(tape, pooled, tape.parameter(store.at("rgrm/W_o")),
                              tape.parameter(store.at("rgrm/b_o")));
  Var broadcast = ops::reshape(tape, ops::repeat_rows(tape, projected, n), rows, features);
  Var enhanced = ops::layer_norm(tape, ops::add(tape, x, broadcast),
                                 tape.parameter(store.at("rgrm/ln_gain")),
                                 tape.parameter(store.at("rgrm/ln_bias")), static_cast<S>(kLayerNormEps));
  return {enhanced, spatial_attention(tape, store, enhanced, time)};
}

#define RSMC_INSTANTIATE(S)                                                                      \
  template void add_rgrm_params<S>(ParamStore<S>&, std::uint64_t, Index, Index, bool);           \
  template Var region_mean<S>(Tape<S>&, Var, const RegionPartition&);                            \
  template std::vector<Index> region_sparse_partners<S>(const Matrix<S>&, const Matrix<S>&,      \
                                                        const RegionPartition&, double);         \
  template Var spatial_attention<S>(Tape<S>&, ParamStore<S>&, Var, Index);                       \
  template SpatialOutput rgrm_forward<S>(Tape<S>&, ParamStore<S>&, Var, Index, Index,            \
                                         const RegionPartition&, bool);
RSMC_INSTANTIATE(float)
RSMC_INSTANTIATE(double)
#undef RSMC_INSTANTIATE

}  // namespace rsmc
