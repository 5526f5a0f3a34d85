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

#include "rsmc/topology.hpp"

#include <algorithm>
#include <set>

#include "rsmc/error.hpp"

namespace rsmc {
namespace {

constexpr std::array<std::string_view, kElectrodeCount> kLabels = {
    // frontal
    "FP1", "FPZ", "FP2", "AF3", "AF4", "F7", "F5", "F3", "F1", "FZ", "F2",
    "F4", "F6", "F8",
    // central
    "FC3", "FC1", "FCZ", "FC2", "FC4", "C3", "C1", "CZ", "C2", "C4",
    // parietal
    "CP3", "CP1", "CPZ", "CP2", "CP4", "P7", "P5", "P3", "P1", "PZ", "P2",
    "P4", "P6", "P8",
    // temporal_left
    "FT7", "FC5", "T7", "C5", "TP7", "CP5",
    // temporal_right
    "FC6", "FT8", "C6", "T8", "CP6", "TP8",
    // occipital
    "PO7", "PO5", "PO3", "POZ", "PO4", "PO6", "PO8", "CB1", "O1", "OZ", "O2",
    "CB2"};

constexpr std::array<int, kRegionCount> kRegionSizes = {14, 10, 14, 6, 6, 12};

constexpr std::array<std::string_view, kRegionCount> kRegionNames = {
    "frontal",       "central",        "parietal",
    "temporal_left", "temporal_right", "occipital"};

constexpr std::array<std::string_view, kBandCount> kBandNames = {
    "delta", "theta", "alpha", "beta", "gamma"};

RegionPartition build_canonical() {
  RegionPartition p;
  p.electrode_count = kElectrodeCount;
  int next = 0;
  for (int r = 0; r < kRegionCount; ++r) {
    Region region{std::string(kRegionNames[r]), {}};
    for (int k = 0; k < kRegionSizes[r]; ++k) region.electrodes.push_back(next++);
    p.regions.push_back(std::move(region));
  }
  return p;
}

}  // namespace

std::string_view region_name(RegionId id) {
  return kRegionNames.at(static_cast<std::size_t>(id));
}

std::string_view band_name(int band) {
  return kBandNames.at(static_cast<std::size_t>(band));
}

std::vector<int> RegionPartition::region_lookup() const {
  std::vector<int> lookup(static_cast<std::size_t>(std::max(electrode_count, 0)), -1);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (int e : regions[r].electrodes) {
      if (e >= 0 && e < electrode_count) lookup[static_cast<std::size_t>(e)] = static_cast<int>(r);
    }
  }
  return lookup;
}

const std::array<Electrode, kElectrodeCount>& electrodes() {
  static const auto table = [] {
    std::array<Electrode, kElectrodeCount> t{};
    for (int i = 0; i < kElectrodeCount; ++i) t[static_cast<std::size_t>(i)] = {i, kLabels[static_cast<std::size_t>(i)]};
    return t;
  }();
  return table;
}

const RegionPartition& canonical_partition() {
  static const RegionPartition p = build_canonical();
  return p;
}

int electrode_index(std::string_view label) {
  auto it = std::find(kLabels.begin(), kLabels.end(), label);
  if (it == kLabels.end()) {
    throw LookupError("unknown electrode label '" + std::string(label) + "'");
  }
  return static_cast<int>(it - kLabels.begin());
}

RegionId region_of(std::string_view label) {
  const int index = electrode_index(label);
  const auto lookup = canonical_partition().region_lookup();
  return static_cast<RegionId>(lookup[static_cast<std::size_t>(index)]);
}

bool is_disjoint_cover(const RegionPartition& partition) {
  if (partition.electrode_count <= 0) return false;
  std::vector<int> seen(static_cast<std::size_t>(partition.electrode_count), 0);
  for (const auto& region : partition.regions) {
    for (int e : region.electrodes) {
      if (e < 0 || e >= partition.electrode_count) return false;
      if (seen[static_cast<std::size_t>(e)]++ != 0) return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

std::vector<std::string> validate_partition(const RegionPartition& partition) {
  std::vector<std::string> violations;
  if (partition.electrode_count != kElectrodeCount) {
    violations.push_back("electrode count " + std::to_string(partition.electrode_count) +
                         " != " + std::to_string(kElectrodeCount));
  }
  if (partition.regions.size() != kRegionCount) {
    violations.push_back("region count " + std::to_string(partition.regions.size()) +
                         " != " + std::to_string(kRegionCount));
  }
  for (std::size_t r = 0; r < partition.regions.size() && r < kRegionCount; ++r) {
    const auto& region = partition.regions[r];
    if (region.name != kRegionNames[r]) {
      violations.push_back("region " + std::to_string(r) + " named '" + region.name +
                           "', expected '" + std::string(kRegionNames[r]) + "'");
    }
    if (static_cast<int>(region.electrodes.size()) != kRegionSizes[r]) {
      violations.push_back("region '" + region.name + "' has " +
                           std::to_string(region.electrodes.size()) + " electrodes, expected " +
                           std::to_string(kRegionSizes[r]));
    }
  }

  std::set<int> seen;
  bool disjoint = true;
  bool in_range = true;
  for (const auto& region : partition.regions) {
    for (int e : region.electrodes) {
      if (e < 0 || e >= kElectrodeCount) {
        in_range = false;
        continue;
      }
      if (!seen.insert(e).second) disjoint = false;
    }
  }
  if (!in_range) violations.push_back("index out of range");
  if (!disjoint) violations.push_back("not disjoint");
  if (static_cast<int>(seen.size()) != kElectrodeCount) violations.push_back("union incomplete");
  return violations;
}

void write_partition_csv(std::ostream& out) {
  const auto lookup = canonical_partition().region_lookup();
  out << "label,region\n";
  for (const auto& e : electrodes()) {
    out << e.label << ',' << kRegionNames[static_cast<std::size_t>(lookup[static_cast<std::size_t>(e.index)])] << '\n';
  }
}

}  // namespace rsmc
