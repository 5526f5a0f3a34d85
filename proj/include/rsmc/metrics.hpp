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

// Classification metrics in percent. Macro averages run over the classes
// that occur in the labels.

#ifndef RSMC_METRICS_HPP_
#define RSMC_METRICS_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace rsmc {

using Confusion = std::vector<std::vector<std::size_t>>;  // [true][predicted]

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  Confusion confusion;
};

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels, int classes);

// Each row divided by its sum; empty rows stay zero.
std::vector<std::vector<double>> row_normalize(const Confusion& confusion);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

MeanStd mean_std(std::span<const double> values);

}  // namespace rsmc

#endif  // RSMC_METRICS_HPP_
