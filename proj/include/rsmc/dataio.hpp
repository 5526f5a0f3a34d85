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

// Windowed differential-entropy datasets: container file I/O, sliding-window
// segmentation, min-max normalisation and a synthetic multi-subject
// generator with controllable inter-subject shift.
//
// Container layout (all integers unsigned 32-bit little-endian):
//
//   "RSMC" | version u8 | B | T | F | C | S
//   B*T*F float32 LE, row-major (sample, time, feature)
//   B label bytes | B subject-id bytes
//
// A sidecar <file>.json carries class names and provenance.

#ifndef RSMC_DATAIO_HPP_
#define RSMC_DATAIO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rsmc {

inline constexpr std::uint8_t kContainerVersion = 1;

// (batch, time, feature) block of float32 values, row-major.
struct FeatureTensor {
  std::uint32_t batch = 0;
  std::uint32_t time = 0;
  std::uint32_t features = 0;
  std::vector<float> values;

  float& at(std::size_t b, std::size_t t, std::size_t f) {
    return values[(b * time + t) * features + f];
  }
  float at(std::size_t b, std::size_t t, std::size_t f) const {
    return values[(b * time + t) * features + f];
  }
  // Start of sample b: time * features contiguous values.
  const float* sample(std::size_t b) const { return values.data() + b * time * features; }

  bool operator==(const FeatureTensor&) const = default;
};

struct Dataset {
  FeatureTensor samples;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> subjects;
  std::uint32_t classes = 0;
  std::uint32_t subject_count = 0;
  std::vector<std::string> class_names;
  std::string provenance;

  std::uint32_t size() const { return samples.batch; }
  std::uint32_t window() const { return samples.time; }

  bool operator==(const Dataset&) const = default;
};

// Empty result means every Dataset invariant holds.
std::vector<std::string> validate_dataset(const Dataset& data);

// Copy of the listed samples (metadata kept).
Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

// One recording trial: `steps` consecutive feature vectors of width F.
struct Trial {
  std::string name;
  std::uint8_t label = 0;
  std::uint8_t subject = 0;
  std::uint32_t steps = 0;
  std::vector<float> values;  // steps * F
};

// Non-overlapping windows of length `window` per trial (stride = window);
// any trailing remainder shorter than the window is dropped.
Dataset segment_windows(std::span<const Trial> trials, std::uint32_t features,
                        std::uint32_t window, std::uint32_t classes, std::uint32_t subject_count);

struct MinMaxStats {
  std::vector<float> min;
  std::vector<float> max;
};

// Per-feature statistics over every (sample, time) row of `data`.
MinMaxStats fit_minmax(const Dataset& data);
// (x - min) / (max - min); constant columns map to 0. No clipping.
void apply_minmax(Dataset& data, const MinMaxStats& stats);

struct NormalizedSplit {
  Dataset train;
  std::vector<Dataset> others;
  MinMaxStats stats;
};

// Statistics from `train` only, applied to train and every other dataset.
NormalizedSplit minmax_normalize(const Dataset& train, std::span<const Dataset> others);

struct SynthSpec {
  std::uint32_t subjects = 6;
  std::uint32_t classes = 3;
  std::uint32_t per_subject = 200;
  std::uint32_t window = 10;
  double snr = 1.0;
  double shift = 0.5;
  std::uint64_t seed = 3;
};

std::vector<std::string> validate_synth_spec(const SynthSpec& spec);

// Class c raises band b_c of every electrode in region r_c, with
// (r_c, b_c) distinct across classes. Subject s mixes each clean time step
// through M_s = I + shift * G_s / sqrt(F) (G_s standard normal; shift = 0
// skips the mix) and white noise of standard deviation amplitude / snr is
// added. A pure function of the spec.
Dataset synthesize(const SynthSpec& spec);

// (region, band) pair carrying the signal of class c.
std::pair<int, int> synth_class_block(std::uint32_t class_index);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Byte-level codec behind save/load. decode throws ParseError with the
// failing byte offset.
std::string encode_dataset(const Dataset& data);
Dataset decode_dataset(std::span<const unsigned char> bytes);

}  // namespace rsmc

#endif  // RSMC_DATAIO_HPP_
