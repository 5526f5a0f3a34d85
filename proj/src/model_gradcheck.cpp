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

#include <vector>

#include "rsmc/dataio.hpp"
#include "rsmc/gradcheck.hpp"
#include "rsmc/model.hpp"

namespace rsmc {

GradCheckReport check_model_gradients(std::size_t probes, std::uint64_t seed, bool dropout_enabled) {
  if (probes == 0) throw PreconditionError("gradient check needs at least one probe");
  if (dropout_enabled) throw PreconditionError("gradient check requires dropout to be disabled");

  SynthSpec spec;
  spec.subjects = 3;
  spec.classes = 3;
  spec.per_subject = 3;
  spec.window = 4;
  spec.snr = 2.0;
  spec.seed = seed;
  Dataset data = synthesize(spec);
  apply_minmax(data, fit_minmax(data));

  ModelConfig config;
  config.time = 4;
  config.classes = 3;
  config.hidden = 8;
  config.heads = 2;
  config.local_window = 1;
  config.embed = 4;
  config.classifier_hidden = 8;
  config.dropout = 0.0;
  config.seed = seed;
  const std::vector<int> bank = {0, 1, 2};
  ParamStore<double> store = init_model<double>(config, bank);

  Matrix<double> x(static_cast<Index>(data.size() * data.window()), data.samples.features);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = data.samples.values[static_cast<std::size_t>(i)];
  const std::vector<int> labels(data.labels.begin(), data.labels.end());
  const std::vector<int> subjects(data.subjects.begin(), data.subjects.end());
  const LossWeights weights;

  LossBuilder loss = [&](Tape<double>& tape) {
    RngStream rng(seed, "gradcheck/dropout");
    ForwardOutput out = model_forward(tape, store, config, tape.constant(x), subjects, Mode::kTrain, rng);
    return total_loss(tape, out.head, labels, subjects, weights).total_var;
  };
  GradCheckOptions options;
  options.probes = probes;
  options.seed = seed;
  return grad_check(store, loss, options);
}

}  // namespace rsmc
