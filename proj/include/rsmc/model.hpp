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

// Full network: subject alignment -> region-aware spatial encoder ->
// multi-scale temporal encoder -> domain-generalisation head.

#ifndef RSMC_MODEL_HPP_
#define RSMC_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsmc/codg.hpp"
#include "rsmc/mstt.hpp"
#include "rsmc/rgrm.hpp"

namespace rsmc {

struct ModelConfig {
  Index features = kFeatureCount;
  Index time = 10;
  Index classes = 3;
  Index hidden = 64;
  Index heads = 8;
  Index local_window = 2;
  Index sparse_period = 0;  // 0 selects max(1, T / 4)
  Index embed = 32;
  Index classifier_hidden = 64;
  double dropout = 0.4;
  double bn_momentum = 0.1;
  bool untied_branches = false;
  bool no_align = false;
  bool no_rgrm = false;
  bool no_mstt = false;
  bool no_codg = false;
  std::uint64_t seed = 3;

  Index effective_sparse_period() const {
    return sparse_period > 0 ? sparse_period : default_sparse_period(time);
  }
  MsttShape mstt_shape() const;
  CodgShape codg_shape() const;
};

std::vector<std::string> validate_model_config(const ModelConfig& config);

enum class Mode { kTrain, kEval };

struct ForwardOutput {
  Var aligned;
  SpatialOutput spatial;
  TemporalOutput temporal;
  CodgOutput head;
};

// Parameters for a model whose alignment bank covers `train_subjects`.
template <typename S>
ParamStore<S> init_model(const ModelConfig& config, std::span<const int> train_subjects);

// x: (B*T) x F. Training mode routes sample b through the alignment matrix
// of sample_subjects[b]; eval mode uses the bank mean and ignores the ids.
// `rng` drives dropout.
template <typename S>
ForwardOutput model_forward(Tape<S>& tape, ParamStore<S>& store, const ModelConfig& config, Var x,
                            std::span<const int> sample_subjects, Mode mode, RngStream& rng);

}  // namespace rsmc

#endif  // RSMC_MODEL_HPP_
