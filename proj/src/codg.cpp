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

#include "rsmc/codg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "init.hpp"

namespace rsmc {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kBatchNormEps = 1e-5;
constexpr double kNormEps = 1e-8;

template <typename S>
using Row = Eigen::Matrix<S, 1, Eigen::Dynamic>;

void check_rows(Index rows, std::size_t subjects, const char* who) {
  if (rows != static_cast<Index>(subjects)) {
    throw DimensionError(std::string(who) + ": " + std::to_string(rows) + " rows but " +
                         std::to_string(subjects) + " subject ids");
  }
}

template <typename S>
Var zero_scalar(Tape<S>& tape) {
  return tape.constant(Matrix<S>::Zero(1, 1));
}

// log(sum exp(v)) over the selected entries of one row.
template <typename S>
S log_sum_exp(const std::vector<S>& v) {
  const S m = *std::max_element(v.begin(), v.end());
  S s = 0;
  for (S x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

template <typename S>
void add_codg_params(ParamStore<S>& store, std::uint64_t seed, const CodgShape& shape) {
  const Index h = shape.hidden;
  const Index ch = shape.classifier_hidden;
  if (shape.enabled) {
    store.add("codg/inv/W", init::glorot<S>(h, h, seed, "codg/inv/W"));
    store.add("codg/inv/b", init::zeros<S>(1, h));
    store.add("codg/inv/ln_gain", init::ones<S>(1, h));
    store.add("codg/inv/ln_bias", init::zeros<S>(1, h));
    store.add("codg/W_orth", init::identity<S>(h));
    store.add("codg/embed_spatial/W", init::glorot<S>(shape.embed, shape.features, seed, "codg/embed_spatial/W"));
    store.add("codg/embed_spatial/b", init::zeros<S>(1, shape.embed));
    store.add("codg/embed_temporal/W", init::glorot<S>(shape.embed, shape.time, seed, "codg/embed_temporal/W"));
    store.add("codg/embed_temporal/b", init::zeros<S>(1, shape.embed));
  }
  store.add("codg/cls/fc1/W", init::glorot<S>(ch, h, seed, "codg/cls/fc1/W"));
  store.add("codg/cls/fc1/b", init::zeros<S>(1, ch));
  store.add("codg/cls/bn/gamma", init::ones<S>(1, ch));
  store.add("codg/cls/bn/beta", init::zeros<S>(1, ch));
  store.add("codg/cls/bn/running_mean", init::zeros<S>(1, ch), false);
  store.add("codg/cls/bn/running_var", init::ones<S>(1, ch), false);
  store.add("codg/cls/fc2/W", init::glorot<S>(shape.classes, ch, seed, "codg/cls/fc2/W"));
  store.add("codg/cls/fc2/b", init::zeros<S>(1, shape.classes));
}

template <typename S>
Var mmd_loss(Tape<S>& tape, Var features, std::span<const int> subjects) {
  const Matrix<S>& f = tape.value(features);
  check_rows(f.rows(), subjects.size(), "mmd_loss");
  std::map<int, std::vector<Index>> groups;
  for (std::size_t i = 0; i < subjects.size(); ++i) groups[subjects[i]].push_back(static_cast<Index>(i));
  if (groups.size() < 2) return zero_scalar(tape);

  std::vector<std::vector<Index>> members;
  Matrix<S> means(static_cast<Index>(groups.size()), f.cols());
  for (auto& [id, rows] : groups) {
    Row<S> m = Row<S>::Zero(f.cols());
    for (Index r : rows) m += f.row(r);
    means.row(static_cast<Index>(members.size())) = m / static_cast<S>(rows.size());
    members.push_back(std::move(rows));
  }
  const Index g = means.rows();
  const S pairs = static_cast<S>(g * (g - 1) / 2);
  // Unit direction between every pair of means; zero where the means coincide.
  Matrix<S> mean_grad = Matrix<S>::Zero(g, f.cols());
  S total = 0;
  for (Index a = 0; a < g; ++a) {
    for (Index b = a + 1; b < g; ++b) {
      const Row<S> d = means.row(a) - means.row(b);
      const S n = d.norm();
      total += n;
      if (n > S(0)) {
        mean_grad.row(a) += d / n;
        mean_grad.row(b) -= d / n;
      }
    }
  }
  Matrix<S> out(1, 1);
  out(0, 0) = total / pairs;
  mean_grad /= pairs;
  return tape.record(std::move(out), {features},
                     [features, members, mean_grad](Tape<S>& t, std::uint32_t self) {
                       const S go = t.grad(self)(0, 0);
                       Matrix<S>& gi = t.grad(features);
                       for (std::size_t k = 0; k < members.size(); ++k) {
                         const S share = go / static_cast<S>(members[k].size());
                         for (Index r : members[k]) gi.row(r) += share * mean_grad.row(static_cast<Index>(k));
                       }
                     });
}

template <typename S>
Var contrastive_loss(Tape<S>& tape, Var embeddings, std::span<const int> subjects, double tau,
                     std::size_t* valid_anchors) {
  if (!(tau > 0.0)) throw PreconditionError("contrastive temperature must be > 0");
  const Matrix<S>& e = tape.value(embeddings);
  check_rows(e.rows(), subjects.size(), "contrastive_loss");
  const Index b = e.rows();
  const S inv_tau = static_cast<S>(1.0 / tau);

  Eigen::Matrix<S, Eigen::Dynamic, 1> norms(b);
  Matrix<S> unit(b, e.cols());
  for (Index i = 0; i < b; ++i) {
    norms(i) = std::sqrt(e.row(i).squaredNorm() + static_cast<S>(kNormEps * kNormEps));
    unit.row(i) = e.row(i) / norms(i);
  }
  const Matrix<S> sim = unit * unit.transpose();

  // dL/dsim, accumulated per valid anchor.
  Matrix<S> sim_grad = Matrix<S>::Zero(b, b);
  S total = 0;
  std::size_t valid = 0;
  std::vector<S> pos, neg;
  std::vector<Index> pos_idx, neg_idx;
  for (Index i = 0; i < b; ++i) {
    pos.clear();
    neg.clear();
    pos_idx.clear();
    neg_idx.clear();
    for (Index j = 0; j < b; ++j) {
      if (j == i) continue;
      if (subjects[static_cast<std::size_t>(j)] == subjects[static_cast<std::size_t>(i)]) {
        pos.push_back(sim(i, j) * inv_tau);
        pos_idx.push_back(j);
      } else {
        neg.push_back(sim(i, j) * inv_tau);
        neg_idx.push_back(j);
      }
    }
    if (pos.empty() || neg.empty()) continue;
    const S lse_pos = log_sum_exp(pos);
    const S lse_neg = log_sum_exp(neg);
    total += lse_neg - lse_pos;
    ++valid;
    for (std::size_t k = 0; k < pos.size(); ++k) sim_grad(i, pos_idx[k]) -= std::exp(pos[k] - lse_pos) * inv_tau;
    for (std::size_t k = 0; k < neg.size(); ++k) sim_grad(i, neg_idx[k]) += std::exp(neg[k] - lse_neg) * inv_tau;
  }
  if (valid_anchors) *valid_anchors = valid;
  if (valid == 0) return zero_scalar(tape);
  sim_grad /= static_cast<S>(valid);
  Matrix<S> out(1, 1);
  out(0, 0) = total / static_cast<S>(valid);
  return tape.record(std::move(out), {embeddings},
                     [embeddings, sim_grad, unit, norms](Tape<S>& t, std::uint32_t self) {
                       const S go = t.grad(self)(0, 0);
                       const Matrix<S> g_unit = go * (sim_grad + sim_grad.transpose()) * unit;
                       Matrix<S>& gi = t.grad(embeddings);
                       for (Index i = 0; i < unit.rows(); ++i) {
                         // d(e/n)/de = (I - u u^T (|e|/n)^2) / n with n = sqrt(|e|^2 + eps^2).
                         const S radial = unit.row(i).dot(g_unit.row(i));
                         gi.row(i) += (g_unit.row(i) - radial * unit.row(i)) / norms(i);
                       }
                     });
}

template <typename S>
Var orthogonal_loss(Tape<S>& tape, Var features) {
  const Matrix<S>& f = tape.value(features);
  const Index b = f.rows();
  if (b < 2) return zero_scalar(tape);
  const Row<S> mean = f.colwise().mean();
  const Matrix<S> centred = f.rowwise() - mean;
  const S denom = static_cast<S>(b - 1);
  const Matrix<S> diff = centred.transpose() * centred / denom - Matrix<S>::Identity(f.cols(), f.cols());
  Matrix<S> out(1, 1);
  out(0, 0) = diff.squaredNorm();
  return tape.record(std::move(out), {features}, [features, centred, diff, denom](Tape<S>& t, std::uint32_t self) {
    t.grad(features) += (S(4) * t.grad(self)(0, 0) / denom) * (centred * diff);
  });
}

template <typename S>
CodgOutput codg_forward(Tape<S>& tape, ParamStore<S>& store, Var pooled, Var spatial_attention,
                        Var temporal_attention, const CodgShape& shape, bool training, RngStream& rng) {
  auto p = [&](const char* path) { return tape.parameter(store.at(path)); };
  CodgOutput out;
  if (shape.enabled) {
    Var inv = ops::relu(tape, ops::layer_norm(tape, ops::linear(tape, pooled, p("codg/inv/W"), p("codg/inv/b")),
                                              p("codg/inv/ln_gain"), p("codg/inv/ln_bias"),
                                              static_cast<S>(kLayerNormEps)));
    out.features = ops::linear(tape, inv, p("codg/W_orth"));
    Var es = ops::relu(tape, ops::linear(tape, spatial_attention, p("codg/embed_spatial/W"), p("codg/embed_spatial/b")));
    Var et = ops::relu(tape, ops::linear(tape, temporal_attention, p("codg/embed_temporal/W"),
                                         p("codg/embed_temporal/b")));
    out.embedding = ops::concat_cols(tape, es, et);
    out.has_embedding = true;
  } else {
    out.features = pooled;
  }
  Var h = ops::linear(tape, out.features, p("codg/cls/fc1/W"), p("codg/cls/fc1/b"));
  h = ops::batch_norm(tape, h, p("codg/cls/bn/gamma"), p("codg/cls/bn/beta"),
                      store.at("codg/cls/bn/running_mean").value, store.at("codg/cls/bn/running_var").value,
                      static_cast<S>(shape.bn_momentum), static_cast<S>(kBatchNormEps), training);
  h = ops::dropout(tape, ops::relu(tape, h), shape.dropout, training, rng);
  out.log_probs = ops::log_softmax_rows(tape, ops::linear(tape, h, p("codg/cls/fc2/W"), p("codg/cls/fc2/b")));
  return out;
}

template <typename S>
LossBundle total_loss(Tape<S>& tape, const CodgOutput& out, std::span<const int> labels,
                      std::span<const int> subjects, const LossWeights& weights) {
  if (weights.contrast < 0 || weights.orth < 0 || weights.mmd < 0) {
    throw PreconditionError("loss weights must be >= 0");
  }
  LossBundle bundle;
  Var cls = ops::nll_loss(tape, out.log_probs, labels);
  bundle.cls = static_cast<double>(tape.value(cls)(0, 0));
  Var total = cls;
  auto add_term = [&](Var term, double weight, double& slot) {
    slot = static_cast<double>(tape.value(term)(0, 0));
    total = ops::add(tape, total, ops::scale(tape, term, static_cast<S>(weight)));
  };
  if (weights.contrast > 0 && out.has_embedding) {
    add_term(contrastive_loss(tape, out.embedding, subjects, weights.tau, &bundle.contrast_anchors),
             weights.contrast, bundle.contrast);
  }
  if (weights.orth > 0) add_term(orthogonal_loss(tape, out.features), weights.orth, bundle.orth);
  if (weights.mmd > 0) add_term(mmd_loss(tape, out.features, subjects), weights.mmd, bundle.mmd);
  bundle.total_var = total;
  bundle.total = static_cast<double>(tape.value(total)(0, 0));
  return bundle;
}

#define RSMC_INSTANTIATE(S)                                                                            \
  template void add_codg_params<S>(ParamStore<S>&, std::uint64_t, const CodgShape&);                   \
  template Var mmd_loss<S>(Tape<S>&, Var, std::span<const int>);                                       \
  template Var contrastive_loss<S>(Tape<S>&, Var, std::span<const int>, double, std::size_t*);         \
  template Var orthogonal_loss<S>(Tape<S>&, Var);                                                      \
  template CodgOutput codg_forward<S>(Tape<S>&, ParamStore<S>&, Var, Var, Var, const CodgShape&, bool, \
                                      RngStream&);                                                     \
  template LossBundle total_loss<S>(Tape<S>&, const CodgOutput&, std::span<const int>,                 \
                                    std::span<const int>, const LossWeights&);
RSMC_INSTANTIATE(float)
RSMC_INSTANTIATE(double)
#undef RSMC_INSTANTIATE

}  // namespace rsmc
