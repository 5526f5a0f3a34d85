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

// Single-fold training: balanced subject batches, Gaussian input noise,
// Adam with step decay, validation-loss early stopping with best-model
// restore, JSON-lines logging.

#ifndef RSMC_TRAINER_HPP_
#define RSMC_TRAINER_HPP_

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "rsmc/config.hpp"
#include "rsmc/dataio.hpp"
#include "rsmc/model.hpp"

namespace rsmc {

struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// round(fraction * n) samples of every (subject, class) group go to
// validation, leaving at least one in training.
ValidationSplit stratified_split(const Dataset& data, double fraction, RngStream& rng);

// Yields batches that cycle over subjects so every subject is represented
// as evenly as the batch size allows. Each subject's samples are drawn
// from a shuffled queue that reshuffles when exhausted.
class BalancedSampler {
 public:
  BalancedSampler(const Dataset& data, RngStream rng);
  std::vector<std::size_t> next(std::size_t batch);
  const std::vector<int>& subjects() const { return subjects_; }
  std::size_t max_subject_count() const;

 private:
  void refill(std::size_t s);
  RngStream rng_;
  std::vector<int> subjects_;
  std::vector<std::vector<std::size_t>> pools_;
  std::vector<std::vector<std::size_t>> queues_;
  std::size_t rotation_ = 0;
};

// (B*T) x F block of the listed samples.
Matrix<float> gather_batch(const Dataset& data, std::span<const std::size_t> indices);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  int iterations = 0;
  double loss = 0.0;
  double cls = 0.0;
  double contrast = 0.0;
  double orth = 0.0;
  double mmd = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainOptions {
  int fold = -1;
  int held_out_subject = -1;  // audited: must never appear in a batch
  std::ostream* log = nullptr;
};

struct TrainResult {
  ParamStore<float> params;
  ModelConfig model;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::uint64_t steps = 0;
  bool stopped_early = false;
  std::size_t batches_checked = 0;
  std::size_t audit_violations = 0;
  std::size_t contrast_empty_batches = 0;
};

// Throws PreconditionError with fewer than 2 training subjects and
// NumericError (carrying options.fold) on a non-finite loss or gradient.
TrainResult train_fold(const Dataset& train, const Dataset& val, const RunConfig& config,
                       const TrainOptions& options = {});

// Mean eval-mode NLL.
double evaluate_loss(ParamStore<float>& params, const ModelConfig& model, const Dataset& data);

// Arg-max class per sample in eval mode. `spatial_attention`, when
// non-null, receives the B x F attention weights.
std::vector<int> predict(ParamStore<float>& params, const ModelConfig& model, const Dataset& data,
                         Matrix<float>* spatial_attention = nullptr);

}  // namespace rsmc

#endif  // RSMC_TRAINER_HPP_
