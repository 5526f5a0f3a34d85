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

// 62-channel 10-20 electrode layout and its six functional brain regions.
//
// Electrode indices follow the row-major listing of the region table
// (frontal first, occipital last), so every region occupies a contiguous
// index range. All feature tensors in the project use this order.

#ifndef RSMC_TOPOLOGY_HPP_
#define RSMC_TOPOLOGY_HPP_

#include <array>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rsmc {

inline constexpr int kElectrodeCount = 62;
inline constexpr int kBandCount = 5;
inline constexpr int kFeatureCount = kElectrodeCount * kBandCount;
inline constexpr int kRegionCount = 6;

enum class RegionId : int {
  kFrontal = 0,
  kCentral = 1,
  kParietal = 2,
  kTemporalLeft = 3,
  kTemporalRight = 4,
  kOccipital = 5,
};

std::string_view region_name(RegionId id);
std::string_view band_name(int band);

struct Electrode {
  int index;
  std::string_view label;
};

struct Region {
  std::string name;
  std::vector<int> electrodes;
};

struct RegionPartition {
  int electrode_count = 0;
  std::vector<Region> regions;

  // Region index of every electrode; -1 where the electrode is uncovered.
  // Only meaningful for partitions that cover [0, electrode_count) disjointly.
  std::vector<int> region_lookup() const;
};

// The canonical 62 electrodes in index order.
const std::array<Electrode, kElectrodeCount>& electrodes();

// The built-in six-region partition.
const RegionPartition& canonical_partition();

// Index of a canonical label. Throws LookupError for unknown labels.
int electrode_index(std::string_view label);

// Region that contains `label`. Throws LookupError naming the label.
RegionId region_of(std::string_view label);

// Empty result means the partition satisfies every invariant
// (six regions, sizes 14/10/14/6/6/12, disjoint, union = {0..61}).
std::vector<std::string> validate_partition(const RegionPartition& partition);

// True when the regions are pairwise disjoint and cover [0, electrode_count).
// Weaker than validate_partition; used by operators that accept any cover.
bool is_disjoint_cover(const RegionPartition& partition);

// Two-column CSV: label,region.
void write_partition_csv(std::ostream& out);

}  // namespace rsmc

#endif  // RSMC_TOPOLOGY_HPP_
