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

#include "rsmc/optimizer.hpp"

#include <cmath>

#include "rsmc/error.hpp"

namespace rsmc {

template <typename S>
void Adam<S>::step(ParamStore<S>& store, double lr) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    if (p.trainable && !p.grad.allFinite()) throw NumericError("non-finite gradient in parameter '" + p.path + "'");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const S c1 = static_cast<S>(1.0 - std::pow(options_.beta1, t));
  const S c2 = static_cast<S>(1.0 - std::pow(options_.beta2, t));
  const S b1 = static_cast<S>(options_.beta1);
  const S b2 = static_cast<S>(options_.beta2);
  const S eps = static_cast<S>(options_.eps);
  const S rate = static_cast<S>(lr);
  const S decay = static_cast<S>(lr * options_.weight_decay);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    if (!p.trainable) continue;
    auto it = moments_.find(p.path);
    if (it == moments_.end()) {
      it = moments_.emplace(p.path, Moments{Matrix<S>::Zero(p.value.rows(), p.value.cols()),
                                            Matrix<S>::Zero(p.value.rows(), p.value.cols())}).first;
    }
    Moments& mo = it->second;
    mo.m = b1 * mo.m + (S(1) - b1) * p.grad;
    mo.v = b2 * mo.v + (S(1) - b2) * p.grad.cwiseProduct(p.grad);
    const Matrix<S> update = (mo.m / c1).array() / ((mo.v / c2).array().sqrt() + eps);
    p.value -= rate * update + decay * p.value;
  }
}

double schedule_lr(double base, int epoch, int step_size, double factor) {
  if (epoch < 0) throw PreconditionError("schedule_lr: epoch must be >= 0");
  if (step_size < 1) throw PreconditionError("schedule_lr: step size must be >= 1");
  return base * std::pow(factor, epoch / step_size);
}

template <typename S>
void inject_noise(Matrix<S>& x, double sigma, bool training, RngStream& rng) {
  if (!training || sigma == 0.0) return;
  for (Index i = 0; i < x.size(); ++i) x.data()[i] += static_cast<S>(sigma * rng.normal());
}

template class Adam<float>;
template class Adam<double>;
template void inject_noise<float>(Matrix<float>&, double, bool, RngStream&);
template void inject_noise<double>(Matrix<double>&, double, bool, RngStream&);

}  // namespace rsmc
