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

#include "rsmc/model.hpp"

#include "rsmc/align.hpp"

namespace rsmc {

MsttShape ModelConfig::mstt_shape() const {
  MsttShape s;
  s.features = features;
  s.hidden = hidden;
  s.heads = heads;
  s.local_window = local_window;
  s.sparse_period = effective_sparse_period();
  s.untied_branches = untied_branches;
  s.enabled = !no_mstt;
  return s;
}

CodgShape ModelConfig::codg_shape() const {
  CodgShape s;
  s.hidden = hidden;
  s.features = features;
  s.time = time;
  s.embed = embed;
  s.classifier_hidden = classifier_hidden;
  s.classes = classes;
  s.dropout = dropout;
  s.bn_momentum = bn_momentum;
  s.enabled = !no_codg;
  return s;
}

std::vector<std::string> validate_model_config(const ModelConfig& c) {
  std::vector<std::string> v;
  if (c.features != kFeatureCount && !c.no_rgrm) {
    v.push_back("features must be " + std::to_string(kFeatureCount) + " (62 electrodes x 5 bands)");
  }
  if (c.features < 1) v.push_back("features must be >= 1");
  if (c.time < 1) v.push_back("window length T must be >= 1");
  if (c.classes < 1) v.push_back("classes must be >= 1");
  if (c.hidden < 2) v.push_back("hidden must be >= 2");
  if (c.heads < 1 || (c.hidden >= 1 && c.hidden % std::max<Index>(c.heads, 1) != 0)) {
    v.push_back("heads (" + std::to_string(c.heads) + ") must divide hidden (" + std::to_string(c.hidden) + ")");
  }
  if (c.local_window < 0) v.push_back("local_window must be >= 0");
  if (c.sparse_period < 0) v.push_back("sparse_period must be >= 0");
  if (c.embed < 1) v.push_back("embed_dim must be >= 1");
  if (c.classifier_hidden < 1) v.push_back("classifier_hidden must be >= 1");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) v.push_back("dropout must be in [0, 1)");
  if (!(c.bn_momentum > 0.0 && c.bn_momentum <= 1.0)) v.push_back("bn_momentum must be in (0, 1]");
  return v;
}

template <typename S>
ParamStore<S> init_model(const ModelConfig& config, std::span<const int> train_subjects) {
  if (auto v = validate_model_config(config); !v.empty()) throw PreconditionError("invalid model config: " + v.front());
  ParamStore<S> store;
  if (!config.no_align) add_alignment_bank(store, train_subjects, config.features);
  add_rgrm_params(store, config.seed, kBandCount, config.features, !config.no_rgrm);
  add_mstt_params(store, config.seed, config.mstt_shape());
  add_codg_params(store, config.seed, config.codg_shape());
  return store;
}

template <typename S>
ForwardOutput model_forward(Tape<S>& tape, ParamStore<S>& store, const ModelConfig& config, Var x,
                            std::span<const int> sample_subjects, Mode mode, RngStream& rng) {
  const Index rows = tape.value(x).rows();
  if (rows % config.time != 0 || tape.value(x).cols() != config.features) {
    throw DimensionError("model input " + std::to_string(rows) + "x" + std::to_string(tape.value(x).cols()) +
                         " is not (B*" + std::to_string(config.time) + ") x " + std::to_string(config.features));
  }
  const Index batch = rows / config.time;
  const bool training = mode == Mode::kTrain;
  ForwardOutput out;
  if (config.no_align) {
    out.aligned = x;
  } else if (training) {
    out.aligned = calibrate_train(tape, store, x, sample_subjects, config.time);
  } else {
    out.aligned = calibrate_test(tape, store, x);
  }
  out.spatial = rgrm_forward(tape, store, out.aligned, batch, config.time, canonical_partition(), !config.no_rgrm);
  out.temporal = mstt_forward(tape, store, out.spatial.enhanced, batch, config.time, config.mstt_shape());
  out.head = codg_forward(tape, store, out.temporal.pooled, out.spatial.attention, out.temporal.attention,
                          config.codg_shape(), training, rng);
  return out;
}

#define RSMC_INSTANTIATE(S)                                                                    \
  template ParamStore<S> init_model<S>(const ModelConfig&, std::span<const int>);              \
  template ForwardOutput model_forward<S>(Tape<S>&, ParamStore<S>&, const ModelConfig&, Var,   \
                                          std::span<const int>, Mode, RngStream&);
RSMC_INSTANTIATE(float)
RSMC_INSTANTIATE(double)
#undef RSMC_INSTANTIATE

}  // namespace rsmc
