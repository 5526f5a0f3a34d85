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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "lr_oracle.hpp"
#include "rsmc/dataio.hpp"
#include "rsmc/error.hpp"
#include "rsmc/topology.hpp"
#include "le_io_shim.hpp"
#include "test_util.hpp"

namespace rsmc {
namespace {

using testing::TempDir;

Dataset tiny_dataset() {
  Dataset d;
  d.samples.batch = 2;
  d.samples.time = 2;
  d.samples.features = 3;
  d.samples.values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  d.labels = {0, 1};
  d.subjects = {1, 0};
  d.classes = 2;
  d.subject_count = 2;
  d.class_names = {"a", "b"};
  d.provenance = "unit";
  return d;
}

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::size_t parse_offset(std::vector<unsigned char> bytes) {
  try {
    decode_dataset(bytes);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "expected ParseError";
  return 0;
}

std::string parse_message(std::vector<unsigned char> bytes) {
  try {
    decode_dataset(bytes);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

Trial make_trial(std::string name, std::uint32_t steps, std::uint32_t features, float base = 0) {
  Trial t;
  t.name = std::move(name);
  t.steps = steps;
  for (std::uint32_t i = 0; i < steps * features; ++i) t.values.push_back(base + static_cast<float>(i));
  return t;
}

TEST(Codec, HeaderLayout) {
  const std::string bytes = encode_dataset(tiny_dataset());
  ASSERT_EQ(bytes.size(), 25u + 12u * 4u + 4u);
  EXPECT_EQ(bytes.substr(0, 4), "RSMC");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), kContainerVersion);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EXPECT_EQ(testing::u32_at(p + 5), 2u);   // B
  EXPECT_EQ(testing::u32_at(p + 9), 2u);   // T
  EXPECT_EQ(testing::u32_at(p + 13), 3u);  // F
  EXPECT_EQ(testing::u32_at(p + 17), 2u);  // C
  EXPECT_EQ(testing::u32_at(p + 21), 2u);  // S
  // 1.0f little-endian.
  EXPECT_EQ(static_cast<unsigned char>(bytes[25 + 3]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[25 + 2]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 4]), 0);  // label 0
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 2]), 1);  // subject 1
}

TEST(Codec, RoundTrip) {
  const Dataset d = tiny_dataset();
  Dataset back = decode_dataset(bytes_of(encode_dataset(d)));
  EXPECT_EQ(back.samples, d.samples);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.subjects, d.subjects);
  EXPECT_EQ(back.classes, d.classes);
  EXPECT_EQ(back.subject_count, d.subject_count);
}

TEST(Codec, FileRoundTripOfSynthesizedData) {
  TempDir dir;
  SynthSpec spec;
  spec.per_subject = 20;
  const Dataset d = synthesize(spec);
  save_dataset(d, dir / "d.rsmc");
  EXPECT_TRUE(std::filesystem::exists(dir / "d.rsmc.json"));
  EXPECT_EQ(load_dataset(dir / "d.rsmc"), d);
}

TEST(Codec, BadMagic) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  b[0] = 'X';
  EXPECT_EQ(parse_offset(b), 0u);
}

TEST(Codec, BadVersion) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  b[4] = 9;
  EXPECT_EQ(parse_offset(b), 4u);
}

TEST(Codec, TruncatedHeader) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  b.resize(12);
  EXPECT_EQ(parse_offset(b), 12u);
}

TEST(Codec, TruncatedPayload) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  b.resize(b.size() - 3);
  EXPECT_EQ(parse_offset(b), b.size());
  EXPECT_NE(parse_message(b).find("truncated"), std::string::npos);
}

TEST(Codec, TrailingBytes) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  const std::size_t expected = b.size();
  b.push_back(0);
  EXPECT_EQ(parse_offset(b), expected);
}

TEST(Codec, FeatureCountMismatch) {
  // Header says F=310 but every row carries 300 floats.
  Dataset d;
  d.samples.batch = 2;
  d.samples.time = 1;
  d.samples.features = 300;
  d.samples.values.assign(600, 0.5f);
  d.labels = {0, 0};
  d.subjects = {0, 0};
  d.classes = 1;
  d.subject_count = 1;
  auto b = bytes_of(encode_dataset(d));
  testing::put_u32_at(b.data() + 13, 310);
  const std::string msg = parse_message(b);
  EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
  EXPECT_NE(msg.find("F=310"), std::string::npos) << msg;
  EXPECT_NE(msg.find("300 floats per row"), std::string::npos) << msg;
  EXPECT_EQ(parse_offset(b), 25u);
}

TEST(Codec, NonFiniteValueReportsItsOffset) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(b.data() + 25 + 5 * 4, &nan, 4);
  EXPECT_EQ(parse_offset(b), 25u + 5u * 4u);
  Dataset d = tiny_dataset();
  d.samples.values[5] = nan;
  EXPECT_THROW(encode_dataset(d), Error);
}

TEST(Codec, LabelOutOfRange) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  const std::size_t label_off = 25 + 12 * 4;
  b[label_off + 1] = 7;
  EXPECT_EQ(parse_offset(b), label_off + 1);
}

TEST(Codec, SubjectOutOfRange) {
  auto b = bytes_of(encode_dataset(tiny_dataset()));
  const std::size_t subject_off = 25 + 12 * 4 + 2;
  b[subject_off] = 2;
  EXPECT_EQ(parse_offset(b), subject_off);
}

TEST(Codec, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_THROW(load_dataset(dir / "absent.rsmc"), IoError);
}

TEST(Segment, WindowCounts) {
  const std::uint32_t f = 2;
  std::vector<Trial> a = {make_trial("a", 65, f)};
  EXPECT_EQ(segment_windows(a, f, 30, 1, 1).size(), 2u);
  std::vector<Trial> b = {make_trial("b", 30, f)};
  EXPECT_EQ(segment_windows(b, f, 30, 1, 1).size(), 1u);
  std::vector<Trial> c = {make_trial("c1", 40, f), make_trial("c2", 25, f)};
  EXPECT_EQ(segment_windows(c, f, 10, 1, 1).size(), 6u);
}

TEST(Segment, WindowsAreNonOverlappingSlices) {
  const std::uint32_t f = 2;
  std::vector<Trial> trials = {make_trial("t", 7, f)};
  trials[0].label = 1;
  trials[0].subject = 0;
  const Dataset d = segment_windows(trials, f, 3, 2, 1);
  ASSERT_EQ(d.size(), 2u);
  // Window 1 starts at step 3: value index 6.
  EXPECT_EQ(d.samples.at(1, 0, 0), 6.0f);
  EXPECT_EQ(d.samples.at(1, 2, 1), 11.0f);
  EXPECT_EQ(d.labels, (std::vector<std::uint8_t>{1, 1}));
}

TEST(Segment, ShortTrialNamed) {
  std::vector<Trial> trials = {make_trial("session_7", 5, 2)};
  try {
    segment_windows(trials, 2, 10, 1, 1);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("session_7"), std::string::npos);
  }
}

Dataset column_dataset(std::vector<float> values) {
  Dataset d;
  d.samples.batch = static_cast<std::uint32_t>(values.size());
  d.samples.time = 1;
  d.samples.features = 1;
  d.samples.values = std::move(values);
  d.labels.assign(d.samples.batch, 0);
  d.subjects.assign(d.samples.batch, 0);
  d.classes = 1;
  d.subject_count = 1;
  return d;
}

TEST(MinMax, Midpoint) {
  const auto stats = fit_minmax(column_dataset({2, 4}));
  Dataset test = column_dataset({3});
  apply_minmax(test, stats);
  EXPECT_FLOAT_EQ(test.samples.values[0], 0.5f);
}

TEST(MinMax, ConstantColumnMapsToZero) {
  const auto stats = fit_minmax(column_dataset({3, 3, 3}));
  Dataset test = column_dataset({-8, 3, 40});
  apply_minmax(test, stats);
  for (float v : test.samples.values) EXPECT_EQ(v, 0.0f);
}

TEST(MinMax, NoClipping) {
  const Dataset train = column_dataset({1, 5});
  const std::vector<Dataset> others = {column_dataset({9})};
  const auto split = minmax_normalize(train, others);
  EXPECT_FLOAT_EQ(split.others[0].samples.values[0], 2.0f);
  EXPECT_FLOAT_EQ(split.train.samples.values[0], 0.0f);
  EXPECT_FLOAT_EQ(split.train.samples.values[1], 1.0f);
}

TEST(MinMax, TrainRangeIsUnitInterval) {
  SynthSpec spec;
  spec.per_subject = 12;
  Dataset d = synthesize(spec);
  apply_minmax(d, fit_minmax(d));
  for (std::uint32_t f = 0; f < d.samples.features; ++f) {
    float lo = 1e9f, hi = -1e9f;
    for (std::size_t r = 0; r < std::size_t{d.size()} * d.window(); ++r) {
      const float v = d.samples.values[r * d.samples.features + f];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_EQ(lo, 0.0f);
    EXPECT_NEAR(hi, 1.0f, 1e-6);
  }
}

TEST(Synth, ShapeAndValidity) {
  SynthSpec spec;
  spec.seed = 7;
  const Dataset d = synthesize(spec);
  EXPECT_EQ(d.size(), 1200u);
  EXPECT_EQ(d.window(), 10u);
  EXPECT_EQ(d.samples.features, static_cast<std::uint32_t>(kFeatureCount));
  EXPECT_TRUE(validate_dataset(d).empty());
  std::vector<int> per_subject(6, 0);
  std::vector<std::vector<int>> per_class(6, std::vector<int>(3, 0));
  for (std::size_t i = 0; i < d.size(); ++i) {
    ++per_subject[d.subjects[i]];
    ++per_class[d.subjects[i]][d.labels[i]];
  }
  for (int c : per_subject) EXPECT_EQ(c, 200);
  // 200 does not split evenly in 3: counts per subject differ by at most one.
  for (const auto& counts : per_class) {
    EXPECT_LE(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()), 1);
  }
}

TEST(Synth, BitReproducible) {
  SynthSpec spec;
  spec.seed = 7;
  EXPECT_EQ(encode_dataset(synthesize(spec)), encode_dataset(synthesize(spec)));
  SynthSpec other = spec;
  other.seed = 8;
  EXPECT_NE(encode_dataset(synthesize(spec)), encode_dataset(synthesize(other)));
}

TEST(Synth, ClassBlocksAreDistinct) {
  std::set<std::pair<int, int>> seen;
  for (std::uint32_t c = 0; c < 30; ++c) {
    const auto block = synth_class_block(c);
    EXPECT_GE(block.first, 0);
    EXPECT_LT(block.first, kRegionCount);
    EXPECT_GE(block.second, 0);
    EXPECT_LT(block.second, kBandCount);
    EXPECT_TRUE(seen.insert(block).second) << c;
  }
}

// Per (subject, class) mean over windows and time of each feature.
std::vector<std::vector<double>> class_means(const Dataset& d, int subject) {
  std::vector<std::vector<double>> mean(d.classes, std::vector<double>(d.samples.features, 0.0));
  std::vector<int> count(d.classes, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (subject >= 0 && d.subjects[i] != subject) continue;
    ++count[d.labels[i]];
    for (std::size_t t = 0; t < d.window(); ++t) {
      for (std::size_t f = 0; f < d.samples.features; ++f) mean[d.labels[i]][f] += d.samples.at(i, t, f);
    }
  }
  for (std::size_t c = 0; c < d.classes; ++c) {
    for (auto& v : mean[c]) v /= static_cast<double>(count[c]) * d.window();
  }
  return mean;
}

TEST(Synth, ZeroShiftSharesOneDistribution) {
  SynthSpec spec;
  spec.shift = 0.0;
  spec.snr = 1e6;
  spec.per_subject = 6;
  const Dataset d = synthesize(spec);
  // With negligible noise and no mixing every subject's class means coincide.
  const auto ref = class_means(d, 0);
  for (int s = 1; s < 6; ++s) {
    const auto m = class_means(d, s);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t f = 0; f < d.samples.features; ++f) ASSERT_NEAR(m[c][f], ref[c][f], 1e-4);
    }
  }
}

TEST(Synth, ClassSignalSitsInItsRegionBand) {
  SynthSpec spec;
  spec.shift = 0.0;
  spec.snr = 1e6;
  spec.per_subject = 6;
  const Dataset d = synthesize(spec);
  const auto m = class_means(d, -1);
  const auto lookup = canonical_partition().region_lookup();
  for (std::uint32_t c = 0; c < 3; ++c) {
    const auto [region, band] = synth_class_block(c);
    const std::uint32_t other = (c + 1) % 3;
    for (int e = 0; e < kElectrodeCount; ++e) {
      const std::size_t f = static_cast<std::size_t>(e) * kBandCount + static_cast<std::size_t>(band);
      const bool inside = lookup[static_cast<std::size_t>(e)] == region;
      const auto [oregion, oband] = synth_class_block(other);
      const bool inside_other = lookup[static_cast<std::size_t>(e)] == oregion && oband == band;
      if (inside_other) continue;
      EXPECT_NEAR(m[c][f] - m[other][f], inside ? 1.0 : 0.0, 1e-4) << "class " << c << " feature " << f;
    }
  }
}

TEST(Synth, NearestClassMeanIsPerfectWithoutShiftOrNoise) {
  SynthSpec spec;
  spec.shift = 0.0;
  spec.snr = 1e6;
  spec.per_subject = 30;
  const Dataset d = synthesize(spec);
  const auto means = class_means(d, -1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < d.classes; ++c) {
      double dist = 0;
      for (std::size_t t = 0; t < d.window(); ++t) {
        for (std::size_t f = 0; f < d.samples.features; ++f) {
          const double diff = d.samples.at(i, t, f) - means[c][f];
          dist += diff * diff;
        }
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    hits += best == d.labels[i];
  }
  EXPECT_EQ(hits, d.size());
}

TEST(Synth, InvalidSpecRejected) {
  SynthSpec spec;
  spec.subjects = 0;
  EXPECT_FALSE(validate_synth_spec(spec).empty());
  EXPECT_THROW(synthesize(spec), PreconditionError);
  spec = {};
  spec.snr = 0.0;
  EXPECT_FALSE(validate_synth_spec(spec).empty());
}

TEST(Subset, KeepsMetadata) {
  const Dataset d = tiny_dataset();
  const std::vector<std::size_t> pick = {1};
  const Dataset s = subset(d, pick);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.labels[0], 1);
  EXPECT_EQ(s.samples.values[0], 7.0f);
  EXPECT_EQ(s.class_names, d.class_names);
  const std::vector<std::size_t> bad = {5};
  EXPECT_THROW(subset(d, bad), LookupError);
}

}  // namespace
}  // namespace rsmc
