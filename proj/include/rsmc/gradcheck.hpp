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

#ifndef RSMC_GRADCHECK_HPP_
#define RSMC_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rsmc/ops.hpp"

namespace rsmc {

struct GradCheckOptions {
  std::size_t probes = 50;
  double step = 1e-5;
  std::uint64_t seed = 0;
  // Restrict probing to these parameter paths; empty means every trainable one.
  std::vector<std::string> paths;
  // Relative errors are |a - n| / max(|a|, |n|, floor). The floor keeps
  // round-off in near-zero gradients from reading as a mismatch.
  double denominator_floor = 1e-5;
};

struct GradCheckProbe {
  std::string path;
  Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<GradCheckProbe> probes;
};

// Builds the scalar loss on a fresh tape; must bind parameters through
// tape.parameter(store.at(...)) so perturbations are observed.
using LossBuilder = std::function<Var(Tape<double>&)>;

double relative_error(double analytic, double numeric, double floor);

// Central differences (f(x+h) - f(x-h)) / 2h against the reverse-mode
// gradient, over randomly chosen coordinates (parameter first, then index).
GradCheckReport grad_check(ParamStore<double>& store, const LossBuilder& loss,
                           const GradCheckOptions& options = {});

// Probes the full training objective of a tiny model (H=8, T=4, 2 heads,
// 62 electrodes) on a small synthetic batch in double precision, with
// noise and dropout off. dropout_enabled = true throws PreconditionError:
// a stochastic mask makes finite differences meaningless.
GradCheckReport check_model_gradients(std::size_t probes, std::uint64_t seed, bool dropout_enabled = false);

}  // namespace rsmc

#endif  // RSMC_GRADCHECK_HPP_
