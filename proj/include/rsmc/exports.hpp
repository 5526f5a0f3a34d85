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

// CSV exports: attention masks, spatial attention maps and row-normalised
// confusion matrices.

#ifndef RSMC_EXPORTS_HPP_
#define RSMC_EXPORTS_HPP_

#include <filesystem>
#include <ostream>
#include <vector>

#include "rsmc/dataio.hpp"
#include "rsmc/metrics.hpp"
#include "rsmc/params.hpp"

namespace rsmc {

// 1 where attention is allowed, 0 where masked; T rows of T columns.
void write_mask_csv(std::ostream& out, const Matrix<double>& mask);

// Header: sample,subject,label then <electrode>_<band> for all 310 features
// in electrode-major order; one row per sample.
void write_spatial_attention_csv(std::ostream& out, const Matrix<float>& attention, const Dataset& data);

// Header: true\pred,0..C-1; each row sums to 1 (empty rows stay 0).
void write_confusion_csv(std::ostream& out, const std::vector<std::vector<double>>& normalized);

// Recomputes held-out spatial attention for one fold of a LOSO run.
// Returns the CSV path written under run_dir/exports.
std::filesystem::path export_spatial_attention(const std::filesystem::path& run_dir, int subject,
                                               const Dataset& data);

// Row-normalised confusion per fold plus the fold sum. Returns written paths.
std::vector<std::filesystem::path> export_confusion(const std::filesystem::path& run_dir);

// local_mask.csv and sparse_mask.csv for the run's T, w and p.
std::vector<std::filesystem::path> export_masks(const std::filesystem::path& run_dir);

}  // namespace rsmc

#endif  // RSMC_EXPORTS_HPP_
