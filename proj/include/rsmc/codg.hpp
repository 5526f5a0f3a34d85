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

// Domain-generalisation head: invariant extractor with a bias-free
// orthogonal projection, attention embeddings, the three auxiliary losses
// (first-moment subject discrepancy, subject-contrastive InfoNCE, feature
// decorrelation) and the batch-normalised MLP classifier.

#ifndef RSMC_CODG_HPP_
#define RSMC_CODG_HPP_

#include <cstdint>
#include <span>

#include "rsmc/ops.hpp"

namespace rsmc {

struct CodgShape {
  Index hidden = 64;
  Index features = 310;
  Index time = 10;
  Index embed = 32;
  Index classifier_hidden = 64;
  Index classes = 3;
  double dropout = 0.4;
  double bn_momentum = 0.1;
  // false: the classifier reads the pooled temporal vector directly.
  bool enabled = true;
};

template <typename S>
void add_codg_params(ParamStore<S>& store, std::uint64_t seed, const CodgShape& shape);

struct LossWeights {
  double contrast = 1.0;
  double orth = 0.01;
  double mmd = 1.0;
  double tau = 0.5;
};

// Mean over unordered pairs of distinct subjects present in the batch of the
// Euclidean distance between their mean rows; 0 with fewer than 2 subjects.
template <typename S>
Var mmd_loss(Tape<S>& tape, Var features, std::span<const int> subjects);

// InfoNCE over cosine similarities with same-subject positives and
// other-subject negatives. Anchors lacking either set are left out of the
// mean; `valid_anchors` receives how many remained (0 yields a zero loss).
template <typename S>
Var contrastive_loss(Tape<S>& tape, Var embeddings, std::span<const int> subjects, double tau,
                     std::size_t* valid_anchors = nullptr);

// ||R - I||_F^2 with R the sample covariance of the column-centred rows.
// Zero for fewer than 2 rows.
template <typename S>
Var orthogonal_loss(Tape<S>& tape, Var features);

struct CodgOutput {
  Var features;   // classifier input: f_orth, or z when disabled
  Var embedding;  // B x 2*embed; unset when disabled
  Var log_probs;  // B x C
  bool has_embedding = false;
};

// `rng` drives classifier dropout in training mode.
template <typename S>
CodgOutput codg_forward(Tape<S>& tape, ParamStore<S>& store, Var pooled, Var spatial_attention,
                        Var temporal_attention, const CodgShape& shape, bool training, RngStream& rng);

struct LossBundle {
  double cls = 0.0;
  double contrast = 0.0;
  double orth = 0.0;
  double mmd = 0.0;
  double total = 0.0;
  std::size_t contrast_anchors = 0;
  Var total_var;
};

// total = cls + w.contrast * contrast + w.orth * orth + w.mmd * mmd. Terms
// with a zero weight are not evaluated and report exactly 0.
template <typename S>
LossBundle total_loss(Tape<S>& tape, const CodgOutput& out, std::span<const int> labels,
                      std::span<const int> subjects, const LossWeights& weights);

}  // namespace rsmc

#endif  // RSMC_CODG_HPP_
