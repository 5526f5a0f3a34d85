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

// Leave-one-subject-out evaluation and its on-disk artifacts.
//
// Run directory layout:
//   config.txt                  effective configuration echo
//   run_meta.json               version, timestamp, config hash, dataset path
//   aggregate.json              per-metric mean and population std over folds
//   dataset.rsmc(.json)         written when the data were synthesised
//   fold_<subject>/report.json  fold metrics, raw confusion, audit counters
//   fold_<subject>/confusion.csv        raw counts
//   fold_<subject>/train_log.jsonl      one line per iteration and epoch
//   fold_<subject>/model.{json,bin}     best checkpoint
//   fold_<subject>/model_config.json    architecture + normalisation stats

#ifndef RSMC_LOSO_HPP_
#define RSMC_LOSO_HPP_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "rsmc/config.hpp"
#include "rsmc/metrics.hpp"
#include "rsmc/trainer.hpp"

namespace rsmc {

struct FoldReport {
  int fold = 0;
  int held_out_subject = 0;
  Metrics metrics;
  std::size_t test_samples = 0;
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::uint64_t steps = 0;
  std::size_t batches_checked = 0;
  std::size_t audit_violations = 0;
  std::size_t contrast_empty_batches = 0;
  std::string config_hash;
};

struct LosoReport {
  std::vector<FoldReport> folds;
  MeanStd accuracy;
  MeanStd f1;
  MeanStd sensitivity;
  MeanStd specificity;
  std::string config_hash;
};

// Trains on every subject but `held_out`, evaluates on `held_out`.
// Normalisation statistics come from the source subjects only. Writes fold
// artifacts under run_dir/fold_<held_out> when run_dir is non-empty.
FoldReport run_fold(const Dataset& data, int held_out, int fold_index, const RunConfig& config,
                    const std::filesystem::path& run_dir = {});

// Every subject held out exactly once; folds may run on config.fold_workers
// threads. `progress` receives one line per finished fold.
LosoReport loso_run(const Dataset& data, const RunConfig& config, const std::filesystem::path& run_dir = {},
                    std::ostream* progress = nullptr);

// Writes config.txt and run_meta.json.
void write_run_header(const RunConfig& config, const Dataset& data, const std::filesystem::path& run_dir,
                      const std::string& dataset_path);

std::string fold_dir_name(int subject);

// Architecture, normalisation and checkpoint of one finished fold.
struct FoldArtifacts {
  ModelConfig model;
  MinMaxStats stats;
  int held_out_subject = 0;
  ParamStore<float> params;
};

// Throws IoError when the fold directory or one of its files is missing.
FoldArtifacts load_fold_artifacts(const std::filesystem::path& run_dir, int subject);

}  // namespace rsmc

#endif  // RSMC_LOSO_HPP_
