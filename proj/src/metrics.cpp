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

#include "rsmc/metrics.hpp"

#include <cmath>
#include <string>

#include "rsmc/error.hpp"

namespace rsmc {

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels, int classes) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw PreconditionError("compute_metrics: empty input");
  if (classes < 1) throw PreconditionError("compute_metrics: classes must be >= 1");
  Metrics m;
  m.confusion.assign(static_cast<std::size_t>(classes), std::vector<std::size_t>(static_cast<std::size_t>(classes), 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if (y < 0 || y >= classes || p < 0 || p >= classes) {
      throw PreconditionError("compute_metrics: class index out of range at position " + std::to_string(i));
    }
    ++m.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
    if (y == p) ++correct;
  }
  const double total = static_cast<double>(labels.size());
  m.accuracy = 100.0 * static_cast<double>(correct) / total;

  double f1 = 0, sens = 0, spec = 0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    double tp = static_cast<double>(m.confusion[uc][uc]);
    double row = 0, col = 0;
    for (int k = 0; k < classes; ++k) {
      row += static_cast<double>(m.confusion[uc][static_cast<std::size_t>(k)]);
      col += static_cast<double>(m.confusion[static_cast<std::size_t>(k)][uc]);
    }
    if (row == 0) continue;
    ++present;
    const double fn = row - tp;
    const double fp = col - tp;
    const double tn = total - tp - fn - fp;
    const double recall = tp / row;
    const double precision = col > 0 ? tp / col : 0.0;
    sens += recall;
    spec += (tn + fp) > 0 ? tn / (tn + fp) : 1.0;
    f1 += (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  m.f1 = 100.0 * f1 / present;
  m.sensitivity = 100.0 * sens / present;
  m.specificity = 100.0 * spec / present;
  return m;
}

std::vector<std::vector<double>> row_normalize(const Confusion& confusion) {
  std::vector<std::vector<double>> out;
  for (const auto& row : confusion) {
    double sum = 0;
    for (auto v : row) sum += static_cast<double>(v);
    std::vector<double> r(row.size(), 0.0);
    if (sum > 0) {
      for (std::size_t j = 0; j < row.size(); ++j) r[j] = static_cast<double>(row[j]) / sum;
    }
    out.push_back(std::move(r));
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("mean_std: empty input");
  MeanStd r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size()));
  return r;
}

}  // namespace rsmc
