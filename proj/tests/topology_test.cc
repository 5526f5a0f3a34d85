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

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "rsmc/error.hpp"
#include "rsmc/topology.hpp"

namespace rsmc {
namespace {

// Reference table of the six functional regions, written out independently.
const std::vector<std::pair<std::string, std::vector<std::string>>>& reference_regions() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
      {"frontal", {"FP1", "FPZ", "FP2", "AF3", "AF4", "F7", "F5", "F3", "F1", "FZ", "F2", "F4", "F6", "F8"}},
      {"central", {"FC3", "FC1", "FCZ", "FC2", "FC4", "C3", "C1", "CZ", "C2", "C4"}},
      {"parietal", {"CP3", "CP1", "CPZ", "CP2", "CP4", "P7", "P5", "P3", "P1", "PZ", "P2", "P4", "P6", "P8"}},
      {"temporal_left", {"FT7", "FC5", "T7", "C5", "TP7", "CP5"}},
      {"temporal_right", {"FC6", "FT8", "C6", "T8", "CP6", "TP8"}},
      {"occipital", {"PO7", "PO5", "PO3", "POZ", "PO4", "PO6", "PO8", "CB1", "O1", "OZ", "O2", "CB2"}},
  };
  return table;
}

TEST(Topology, CanonicalPartitionIsValid) {
  EXPECT_TRUE(validate_partition(canonical_partition()).empty());
  EXPECT_TRUE(is_disjoint_cover(canonical_partition()));
}

TEST(Topology, RegionSizes) {
  const auto& p = canonical_partition();
  ASSERT_EQ(p.regions.size(), 6u);
  const std::vector<std::size_t> sizes = {14, 10, 14, 6, 6, 12};
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(p.regions[r].electrodes.size(), sizes[r]) << r;
}

TEST(Topology, MatchesReferenceTable) {
  const auto& p = canonical_partition();
  const auto& ref = reference_regions();
  for (std::size_t r = 0; r < ref.size(); ++r) {
    EXPECT_EQ(p.regions[r].name, ref[r].first);
    std::set<std::string> got;
    for (int e : p.regions[r].electrodes) got.insert(std::string(electrodes()[static_cast<std::size_t>(e)].label));
    EXPECT_EQ(got, std::set<std::string>(ref[r].second.begin(), ref[r].second.end())) << ref[r].first;
  }
}

TEST(Topology, LabelLookup) {
  EXPECT_EQ(region_of("FP1"), RegionId::kFrontal);
  EXPECT_EQ(region_of("T7"), RegionId::kTemporalLeft);
  EXPECT_EQ(region_of("OZ"), RegionId::kOccipital);
  EXPECT_EQ(region_name(region_of("TP8")), "temporal_right");
  for (const auto& e : electrodes()) EXPECT_EQ(electrode_index(e.label), e.index);
}

TEST(Topology, UnknownLabelNamesOffender) {
  try {
    electrode_index("XYZ9");
    FAIL() << "expected LookupError";
  } catch (const LookupError& e) {
    EXPECT_NE(std::string(e.what()).find("XYZ9"), std::string::npos);
  }
}

TEST(Topology, DuplicateElectrodeIsNotDisjoint) {
  RegionPartition p = canonical_partition();
  p.regions[1].electrodes.push_back(electrode_index("FP1"));
  const auto v = validate_partition(p);
  EXPECT_NE(std::find(v.begin(), v.end(), "not disjoint"), v.end());
  EXPECT_FALSE(is_disjoint_cover(p));
}

TEST(Topology, MissingElectrodeIsIncomplete) {
  RegionPartition p = canonical_partition();
  auto& occ = p.regions[5].electrodes;
  occ.erase(std::find(occ.begin(), occ.end(), electrode_index("CB2")));
  const auto v = validate_partition(p);
  EXPECT_NE(std::find(v.begin(), v.end(), "union incomplete"), v.end());
  EXPECT_FALSE(is_disjoint_cover(p));
}

TEST(Topology, CsvDump) {
  std::ostringstream out;
  write_partition_csv(out);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("label,region\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 63);
  EXPECT_NE(s.find("\nCB2,occipital\n"), std::string::npos);
}

}  // namespace
}  // namespace rsmc
