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

#include <gtest/gtest.h>

#include <cmath>

#include "rsmc/gradcheck.hpp"
#include "rsmc/ops.hpp"
#include "rsmc/rgrm.hpp"
#include "rsmc/topology.hpp"
#include "test_util.hpp"

namespace rsmc {
namespace {

using testing::random_matrix;
using M = Matrix<double>;

RegionPartition small_partition() {
  RegionPartition p;
  p.electrode_count = 9;
  p.regions = {{"pair", {0, 1}}, {"six", {2, 3, 4, 5, 6, 7}}, {"single", {8}}};
  return p;
}

// Exhaustive scan: highest q_i . k_j / sqrt(d) over same-region j != i, the
// first (smallest j) winning ties; a lone electrode keeps itself.
std::vector<Index> brute_force_partners(const M& q, const M& k, const RegionPartition& p, double d) {
  const Index n = p.electrode_count;
  const auto lookup = p.region_lookup();
  std::vector<Index> out(static_cast<std::size_t>(q.rows()));
  for (Index g = 0; g < q.rows() / n; ++g) {
    for (Index i = 0; i < n; ++i) {
      Index best = -1;
      double best_score = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < n; ++j) {
        if (j == i || lookup[static_cast<std::size_t>(j)] != lookup[static_cast<std::size_t>(i)]) continue;
        const double s = q.row(g * n + i).dot(k.row(g * n + j)) / std::sqrt(d);
        if (best < 0 || s > best_score) {
          best = j;
          best_score = s;
        }
      }
      out[static_cast<std::size_t>(g * n + i)] = g * n + (best < 0 ? i : best);
    }
  }
  return out;
}

TEST(RegionMean, MatchesBruteForce) {
  const auto& p = canonical_partition();
  RngStream rng(1, "rm");
  Tape<double> t;
  const M v = random_matrix(2 * 62, 5, rng);
  const M out = t.value(region_mean(t, t.constant(v), p));
  for (Index g = 0; g < 2; ++g) {
    for (const auto& region : p.regions) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(5);
      for (int e : region.electrodes) mean += v.row(g * 62 + e);
      mean /= static_cast<double>(region.electrodes.size());
      for (int e : region.electrodes) {
        EXPECT_LT((out.row(g * 62 + e) - mean).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(RegionMean, FrontalBasisVectors) {
  const auto& p = canonical_partition();
  M v = M::Zero(62, 14);
  for (int k = 0; k < 14; ++k) v(p.regions[0].electrodes[static_cast<std::size_t>(k)], k) = 1.0;
  Tape<double> t;
  const M out = t.value(region_mean(t, t.constant(v), p));
  for (int e : p.regions[0].electrodes) {
    for (int k = 0; k < 14; ++k) EXPECT_DOUBLE_EQ(out(e, k), 1.0 / 14.0);
  }
}

TEST(RegionMean, EqualRowsAreFixed) {
  const auto& p = canonical_partition();
  M v(62, 5);
  for (Index e = 0; e < 62; ++e) v.row(e) << 1, 2, 3, 4, 5;
  Tape<double> t;
  EXPECT_TRUE(t.value(region_mean(t, t.constant(v), p)).isApprox(v, 1e-15));
}

TEST(SparsePartners, TwoElectrodeRegionPicksTheOther) {
  const auto p = small_partition();
  RngStream rng(2, "sp");
  const M q = random_matrix(9, 3, rng), k = random_matrix(9, 3, rng);
  const auto partner = region_sparse_partners(q, k, p, 3.0);
  EXPECT_EQ(partner[0], 1);
  EXPECT_EQ(partner[1], 0);
  EXPECT_EQ(partner[8], 8);  // lone electrode keeps itself
}

TEST(SparsePartners, TiesGoToSmallestOtherIndex) {
  const auto p = small_partition();
  const M q = M::Ones(9, 3), k = M::Ones(9, 3);
  const auto partner = region_sparse_partners(q, k, p, 3.0);
  // Six-electrode region {2..7}: electrode 3 picks 2, electrode 2 picks 3.
  EXPECT_EQ(partner[3], 2);
  EXPECT_EQ(partner[2], 3);
  EXPECT_EQ(partner[7], 2);
}

TEST(SparsePartners, ExhaustiveScanOracle) {
  // 1000 random (Q, K) draws; a coarse grid makes exact ties common.
  const auto& canonical = canonical_partition();
  const auto small = small_partition();
  RngStream rng(3, "oracle");
  for (int draw = 0; draw < 1000; ++draw) {
    const RegionPartition& p = draw % 2 == 0 ? canonical : small;
    const Index rows = 2 * p.electrode_count;
    M q = random_matrix(rows, 5, rng), k = random_matrix(rows, 5, rng);
    if (draw % 3 == 0) {
      q = q.array().round();
      k = k.array().round();
    }
    ASSERT_EQ(region_sparse_partners(q, k, p, 5.0), brute_force_partners(q, k, p, 5.0)) << draw;
  }
}

ParamStore<double> rgrm_store(std::uint64_t seed) {
  ParamStore<double> s;
  add_rgrm_params(s, seed, 5, 310);
  return s;
}

M forward(ParamStore<double>& store, const M& x, Index batch, Index time) {
  Tape<double> t;
  return t.value(rgrm_forward(t, store, t.constant(x), batch, time, canonical_partition()).enhanced);
}

TEST(Rgrm, RegisteredParameterShapes) {
  auto s = rgrm_store(1);
  EXPECT_EQ(s.at("rgrm/W_q").value.rows(), 5);
  EXPECT_EQ(s.at("rgrm/alpha").value(0, 0), 0.0);
  EXPECT_EQ(s.at("rgrm/W_a").value.rows(), 310);
  ParamStore<double> off;
  add_rgrm_params(off, 1, 5, 310, false);
  EXPECT_EQ(off.size(), 2u);
  EXPECT_TRUE(off.contains("rgrm/W_a"));
  EXPECT_TRUE(off.contains("rgrm/b_a"));
}

TEST(Rgrm, ZeroProjectionReducesToLayerNorm) {
  auto s = rgrm_store(2);
  s.at("rgrm/W_o").value.setZero();
  RngStream rng(4, "x");
  const M x = random_matrix(6, 310, rng);
  const M out = forward(s, x, 2, 3);
  Tape<double> t;
  const M ln = t.value(ops::layer_norm(t, t.constant(x), t.constant(M::Ones(1, 310)),
                                       t.constant(M::Zero(1, 310)), 1e-5));
  EXPECT_LT((out - ln).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rgrm, GateSaturationSelectsContinuousBranch) {
  // Same forward pass computed by hand for alpha = +20 (gate ~ 1) against
  // the continuous branch alone.
  auto s = rgrm_store(5);
  s.at("rgrm/alpha").value(0, 0) = 20.0;
  RngStream rng(6, "x");
  const M x = random_matrix(2, 310, rng);
  const M got = forward(s, x, 1, 2);

  Tape<double> t;
  const Var xe = ops::reshape(t, t.constant(x), 2 * 62, 5);
  const Var v = ops::linear(t, xe, t.constant(s.at("rgrm/W_v").value));
  const Var cont = region_mean(t, v, canonical_partition());
  const Var pooled = ops::segment_mean(t, cont, 62);
  const Var proj = ops::linear(t, pooled, t.constant(s.at("rgrm/W_o").value), t.constant(s.at("rgrm/b_o").value));
  const Var sum = ops::add(t, t.constant(x), ops::reshape(t, ops::repeat_rows(t, proj, 62), 2, 310));
  const M expect = t.value(ops::layer_norm(t, sum, t.constant(M::Ones(1, 310)), t.constant(M::Zero(1, 310)), 1e-5));
  EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Rgrm, GateHalfAveragesBranches) {
  auto s = rgrm_store(7);
  RngStream rng(8, "x");
  const M x = random_matrix(1, 310, rng);
  const M got = forward(s, x, 1, 1);

  Tape<double> t;
  const Var xe = ops::reshape(t, t.constant(x), 62, 5);
  const M q = t.value(ops::linear(t, xe, t.constant(s.at("rgrm/W_q").value)));
  const M k = t.value(ops::linear(t, xe, t.constant(s.at("rgrm/W_k").value)));
  const Var v = ops::linear(t, xe, t.constant(s.at("rgrm/W_v").value));
  const Var cont = region_mean(t, v, canonical_partition());
  const Var sparse = ops::gather_rows(t, v, brute_force_partners(q, k, canonical_partition(), 5.0));
  const Var fused = ops::scale(t, ops::add(t, cont, sparse), 0.5);
  const Var pooled = ops::segment_mean(t, fused, 62);
  const Var proj = ops::linear(t, pooled, t.constant(s.at("rgrm/W_o").value), t.constant(s.at("rgrm/b_o").value));
  const Var sum = ops::add(t, t.constant(x), ops::reshape(t, ops::repeat_rows(t, proj, 62), 1, 310));
  const M expect = t.value(ops::layer_norm(t, sum, t.constant(M::Ones(1, 310)), t.constant(M::Zero(1, 310)), 1e-5));
  EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rgrm, EqualBranchesMakeGateIrrelevant) {
  // Every electrode of a region carries the same band vector, so the region
  // mean and the best-match partner coincide.
  const auto& p = canonical_partition();
  RngStream rng(9, "x");
  M x(1, 310);
  for (const auto& region : p.regions) {
    const M band = random_matrix(1, 5, rng);
    for (int e : region.electrodes) x.block(0, 5 * e, 1, 5) = band;
  }
  auto s = rgrm_store(10);
  const M a = forward(s, x, 1, 1);
  s.at("rgrm/alpha").value(0, 0) = -3.7;
  const M b = forward(s, x, 1, 1);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpatialAttention, ZeroHeadGivesHalf) {
  auto s = rgrm_store(11);
  s.at("rgrm/W_a").value.setZero();
  RngStream rng(12, "x");
  Tape<double> t;
  const M w = t.value(spatial_attention(t, s, t.constant(random_matrix(6, 310, rng)), 3));
  ASSERT_EQ(w.rows(), 2);
  EXPECT_TRUE((w.array() == 0.5).all());
}

TEST(SpatialAttention, IdenticalStepsAverageToSingleStep) {
  auto s = rgrm_store(13);
  RngStream rng(14, "x");
  const M step = random_matrix(1, 310, rng);
  M x(4, 310);
  for (Index r = 0; r < 4; ++r) x.row(r) = step;
  Tape<double> t;
  const M many = t.value(spatial_attention(t, s, t.constant(x), 4));
  const M one = t.value(spatial_attention(t, s, t.constant(step), 1));
  EXPECT_LT((many - one).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE((many.array() > 0.0).all() && (many.array() < 1.0).all());
}

TEST(Rgrm, GradientCheck) {
  auto s = rgrm_store(15);
  s.at("rgrm/alpha").value(0, 0) = 0.3;
  RngStream rng(16, "x");
  const M x = random_matrix(4, 310, rng);
  const M wout = random_matrix(310, 1, rng);
  const M watt = random_matrix(310, 1, rng);
  GradCheckOptions opt;
  opt.probes = 200;
  const auto report = grad_check(s, [&](Tape<double>& t) {
    const auto out = rgrm_forward(t, s, t.constant(x), 2, 2, canonical_partition());
    return ops::add(t, ops::sum(t, ops::matmul(t, out.enhanced, t.constant(wout))),
                    ops::sum(t, ops::matmul(t, out.attention, t.constant(watt))));
  }, opt);
  EXPECT_LT(report.max_rel_error, 1e-5);
}

}  // namespace
}  // namespace rsmc
