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

// Run configuration: a flat key=value document. Precedence, lowest first:
// built-in defaults, config file, RSMC_SEED, explicit overrides.

#ifndef RSMC_CONFIG_HPP_
#define RSMC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rsmc/codg.hpp"
#include "rsmc/dataio.hpp"
#include "rsmc/model.hpp"

namespace rsmc {

struct RunConfig {
  ModelConfig model;

  double lr = 1e-4;
  double weight_decay = 5e-4;
  int lr_step = 15;
  double lr_factor = 0.7;
  int epochs = 120;
  int batch = 64;
  double noise = 0.12;
  std::uint64_t seed = 3;
  int patience = 20;
  double val_fraction = 0.1;
  LossWeights loss;
  bool no_mmd = false;
  bool no_contrast = false;
  bool no_orth = false;

  std::string dataset;
  bool synth = false;
  SynthSpec synth_spec;
  std::string output = "rsmc_run";
  int fold_workers = 1;

  // Loss weights after ablation flags: no_codg zeroes all three.
  LossWeights effective_loss() const;
  // Model settings with the run seed and ablations applied.
  ModelConfig model_config(Index features, Index time, Index classes) const;

  // Throws ConfigError naming the key on an unknown key or bad value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  // Reads key=value lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  // Applies RSMC_SEED when set.
  void apply_environment();

  // Every effective setting as key=value lines, including derived values
  // (d_k, sparse period for `time`, effective loss weights, version).
  std::string echo(Index time = 0) const;

  std::vector<std::string> validate() const;
};

// FNV-1a of the echo, hex.
std::string config_hash(const std::string& echo);

}  // namespace rsmc

#endif  // RSMC_CONFIG_HPP_
