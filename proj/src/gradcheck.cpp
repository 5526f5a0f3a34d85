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

#include "rsmc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace rsmc {
namespace {

double evaluate(const LossBuilder& loss) {
  Tape<double> tape;
  const Var v = loss(tape);
  const auto& m = tape.value(v);
  if (m.rows() != 1 || m.cols() != 1) throw DimensionError("grad_check: loss must be 1x1");
  return m(0, 0);
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(ParamStore<double>& store, const LossBuilder& loss,
                           const GradCheckOptions& options) {
  std::vector<Parameter<double>*> candidates;
  if (options.paths.empty()) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (store[i].trainable && store[i].value.size() > 0) candidates.push_back(&store[i]);
    }
  } else {
    for (const auto& path : options.paths) candidates.push_back(&store.at(path));
  }
  if (candidates.empty()) throw PreconditionError("grad_check: no parameters to probe");

  store.zero_grad();
  {
    Tape<double> tape;
    const Var root = loss(tape);
    tape.backward(root);
  }

  RngStream rng(options.seed, "gradcheck/probes");
  GradCheckReport report;
  for (std::size_t n = 0; n < options.probes; ++n) {
    Parameter<double>& p = *candidates[rng.below(candidates.size())];
    const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p.value.size())));
    double& slot = p.value.data()[i];
    const double saved = slot;
    slot = saved + options.step;
    const double up = evaluate(loss);
    slot = saved - options.step;
    const double down = evaluate(loss);
    slot = saved;

    GradCheckProbe probe;
    probe.path = p.path;
    probe.index = i;
    probe.analytic = p.grad.data()[i];
    probe.numeric = (up - down) / (2.0 * options.step);
    probe.rel_error = relative_error(probe.analytic, probe.numeric, options.denominator_floor);
    report.max_rel_error = std::max(report.max_rel_error, probe.rel_error);
    report.probes.push_back(std::move(probe));
  }
  return report;
}

}  // namespace rsmc
