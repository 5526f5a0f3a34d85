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

// Checkpoints are a JSON manifest (<prefix>.json: paths, shapes, precision,
// global step, byte offsets) plus one raw little-endian payload
// (<prefix>.bin) holding every tensor back to back in manifest order.

#ifndef RSMC_CHECKPOINT_HPP_
#define RSMC_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "rsmc/params.hpp"

namespace rsmc {

struct CheckpointInfo {
  std::string precision;  // "float32" or "float64"
  std::uint64_t global_step = 0;
};

template <typename S>
void save_checkpoint(const ParamStore<S>& store, const std::filesystem::path& prefix,
                     std::uint64_t global_step);

// Reads every tensor into a fresh store (layout taken from the manifest).
// Payloads of the other precision are converted.
template <typename S>
ParamStore<S> load_checkpoint(const std::filesystem::path& prefix, CheckpointInfo* info = nullptr);

// Overwrites values of an existing store; every manifest path must exist in
// `store` with the same shape.
template <typename S>
CheckpointInfo restore_checkpoint(ParamStore<S>& store, const std::filesystem::path& prefix);

}  // namespace rsmc

#endif  // RSMC_CHECKPOINT_HPP_
