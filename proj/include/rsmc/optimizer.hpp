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

// Adam with decoupled weight decay, the step-decay schedule and Gaussian
// input noise.

#ifndef RSMC_OPTIMIZER_HPP_
#define RSMC_OPTIMIZER_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "rsmc/params.hpp"
#include "rsmc/rng.hpp"

namespace rsmc {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;
};

template <typename S>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta) for
  // every trainable parameter. A non-finite gradient throws NumericError
  // naming the parameter before anything is modified.
  void step(ParamStore<S>& store, double lr);

  std::uint64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }

 private:
  struct Moments {
    Matrix<S> m;
    Matrix<S> v;
  };
  AdamOptions options_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Moments, std::less<>> moments_;
};

// base * factor^floor(epoch / step_size).
double schedule_lr(double base, int epoch, int step_size = 15, double factor = 0.7);

// x + N(0, sigma^2) elementwise in training mode; identity otherwise.
template <typename S>
void inject_noise(Matrix<S>& x, double sigma, bool training, RngStream& rng);

}  // namespace rsmc

#endif  // RSMC_OPTIMIZER_HPP_
