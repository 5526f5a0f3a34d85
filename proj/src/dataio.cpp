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

#include "rsmc/dataio.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "le_io.hpp"
#include "rsmc/error.hpp"
#include "rsmc/rng.hpp"
#include "rsmc/topology.hpp"

namespace rsmc {
namespace {

constexpr std::size_t kHeaderBytes = 4 + 1 + 5 * 4;
constexpr double kSignalAmplitude = 1.0;

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> validate_dataset(const Dataset& d) {
  std::vector<std::string> v;
  const auto& s = d.samples;
  if (s.values.size() != static_cast<std::size_t>(s.batch) * s.time * s.features) {
    v.push_back("value count does not match batch x time x features");
  }
  if (d.labels.size() != s.batch || d.subjects.size() != s.batch) {
    v.push_back("labels/subjects length differs from batch size");
  }
  for (float x : s.values) {
    if (!std::isfinite(x)) {
      v.push_back("non-finite feature value");
      break;
    }
  }
  for (auto c : d.labels) {
    if (c >= d.classes) {
      v.push_back("label " + std::to_string(c) + " >= classes " + std::to_string(d.classes));
      break;
    }
  }
  std::vector<std::size_t> count(d.subject_count, 0);
  for (auto sid : d.subjects) {
    if (sid >= d.subject_count) {
      v.push_back("subject id " + std::to_string(sid) + " >= subject count " +
                  std::to_string(d.subject_count));
      return v;
    }
    ++count[sid];
  }
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] == 0) v.push_back("subject " + std::to_string(i) + " has no samples");
  }
  return v;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.classes = data.classes;
  out.subject_count = data.subject_count;
  out.class_names = data.class_names;
  out.provenance = data.provenance;
  out.samples.batch = static_cast<std::uint32_t>(indices.size());
  out.samples.time = data.samples.time;
  out.samples.features = data.samples.features;
  const std::size_t stride = static_cast<std::size_t>(data.samples.time) * data.samples.features;
  out.samples.values.reserve(indices.size() * stride);
  for (std::size_t i : indices) {
    if (i >= data.size()) throw LookupError("subset: sample index " + std::to_string(i) + " out of range");
    const float* p = data.samples.sample(i);
    out.samples.values.insert(out.samples.values.end(), p, p + stride);
    out.labels.push_back(data.labels[i]);
    out.subjects.push_back(data.subjects[i]);
  }
  return out;
}

Dataset segment_windows(std::span<const Trial> trials, std::uint32_t features, std::uint32_t window,
                        std::uint32_t classes, std::uint32_t subject_count) {
  if (window == 0) throw PreconditionError("segment_windows: window must be >= 1");
  Dataset out;
  out.classes = classes;
  out.subject_count = subject_count;
  out.samples.time = window;
  out.samples.features = features;
  for (const auto& trial : trials) {
    if (trial.values.size() != static_cast<std::size_t>(trial.steps) * features) {
      throw DimensionError("segment_windows: trial '" + trial.name + "' holds " +
                           std::to_string(trial.values.size()) + " values, expected " +
                           std::to_string(trial.steps) + " x " + std::to_string(features));
    }
    if (trial.steps < window) {
      throw PreconditionError("segment_windows: trial '" + trial.name + "' has " +
                              std::to_string(trial.steps) + " steps, shorter than window " +
                              std::to_string(window));
    }
    const std::uint32_t count = trial.steps / window;
    for (std::uint32_t w = 0; w < count; ++w) {
      const auto begin = trial.values.begin() + static_cast<std::ptrdiff_t>(w) * window * features;
      out.samples.values.insert(out.samples.values.end(), begin,
                                begin + static_cast<std::ptrdiff_t>(window) * features);
      out.labels.push_back(trial.label);
      out.subjects.push_back(trial.subject);
      ++out.samples.batch;
    }
  }
  for (std::uint32_t c = 0; c < classes; ++c) out.class_names.push_back("class_" + std::to_string(c));
  return out;
}

MinMaxStats fit_minmax(const Dataset& data) {
  const std::size_t f = data.samples.features;
  const std::size_t rows = static_cast<std::size_t>(data.samples.batch) * data.samples.time;
  if (rows == 0) throw PreconditionError("minmax_normalize: training set is empty");
  MinMaxStats st;
  st.min.assign(f, std::numeric_limits<float>::infinity());
  st.max.assign(f, -std::numeric_limits<float>::infinity());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = data.samples.values.data() + r * f;
    for (std::size_t j = 0; j < f; ++j) {
      st.min[j] = std::min(st.min[j], row[j]);
      st.max[j] = std::max(st.max[j], row[j]);
    }
  }
  return st;
}

void apply_minmax(Dataset& data, const MinMaxStats& st) {
  const std::size_t f = data.samples.features;
  if (st.min.size() != f || st.max.size() != f) {
    throw DimensionError("apply_minmax: statistics for " + std::to_string(st.min.size()) +
                         " features, data has " + std::to_string(f));
  }
  const std::size_t rows = static_cast<std::size_t>(data.samples.batch) * data.samples.time;
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = data.samples.values.data() + r * f;
    for (std::size_t j = 0; j < f; ++j) {
      const float range = st.max[j] - st.min[j];
      row[j] = range > 0.0f ? (row[j] - st.min[j]) / range : 0.0f;
    }
  }
}

NormalizedSplit minmax_normalize(const Dataset& train, std::span<const Dataset> others) {
  NormalizedSplit out;
  out.stats = fit_minmax(train);
  out.train = train;
  apply_minmax(out.train, out.stats);
  for (const auto& d : others) {
    out.others.push_back(d);
    apply_minmax(out.others.back(), out.stats);
  }
  return out;
}

std::vector<std::string> validate_synth_spec(const SynthSpec& spec) {
  std::vector<std::string> v;
  if (spec.subjects < 1) v.push_back("subjects must be >= 1");
  if (spec.subjects > 256) v.push_back("subjects must be <= 256 (stored as bytes)");
  if (spec.classes < 1) v.push_back("classes must be >= 1");
  if (spec.classes > 30) v.push_back("classes must be <= 30 (distinct region/band pairs)");
  if (spec.per_subject < 1) v.push_back("per-subject sample count must be >= 1");
  if (spec.window < 1) v.push_back("window must be >= 1");
  if (!(spec.snr > 0.0)) v.push_back("snr must be > 0");
  if (!(spec.shift >= 0.0) || !std::isfinite(spec.shift)) v.push_back("shift must be finite and >= 0");
  return v;
}

std::pair<int, int> synth_class_block(std::uint32_t c) {
  // c -> (c mod 6, (c div 6 + c) mod 5) is injective for c < 30.
  const int region = static_cast<int>(c % kRegionCount);
  const int band = static_cast<int>((c / kRegionCount + c) % kBandCount);
  return {region, band};
}

Dataset synthesize(const SynthSpec& spec) {
  if (auto v = validate_synth_spec(spec); !v.empty()) throw PreconditionError("invalid synth spec: " + v.front());
  constexpr int F = kFeatureCount;
  const auto& partition = canonical_partition();

  // Class templates: a shared baseline plus one elevated (region, band) block.
  RngStream base_rng(spec.seed, "synth/baseline");
  Eigen::VectorXd baseline(F);
  for (int f = 0; f < F; ++f) baseline(f) = base_rng.uniform();
  std::vector<Eigen::VectorXd> templates;
  for (std::uint32_t c = 0; c < spec.classes; ++c) {
    Eigen::VectorXd mu = baseline;
    const auto [region, band] = synth_class_block(c);
    for (int e : partition.regions[static_cast<std::size_t>(region)].electrodes) {
      mu(e * kBandCount + band) += kSignalAmplitude;
    }
    templates.push_back(std::move(mu));
  }

  const double noise_sd = std::isfinite(spec.snr) ? kSignalAmplitude / spec.snr : 0.0;
  Dataset out;
  out.classes = spec.classes;
  out.subject_count = spec.subjects;
  out.samples.batch = spec.subjects * spec.per_subject;
  out.samples.time = spec.window;
  out.samples.features = F;
  out.samples.values.reserve(static_cast<std::size_t>(out.samples.batch) * spec.window * F);

  for (std::uint32_t s = 0; s < spec.subjects; ++s) {
    const std::string tag = "synth/subject/" + std::to_string(s);
    Eigen::MatrixXd mix;
    const bool mixing = spec.shift > 0.0;
    if (mixing) {
      RngStream mix_rng(spec.seed, tag + "/mix");
      mix = Eigen::MatrixXd::Identity(F, F);
      const double scale = spec.shift / std::sqrt(static_cast<double>(F));
      for (int i = 0; i < F; ++i) {
        for (int j = 0; j < F; ++j) mix(i, j) += scale * mix_rng.normal();
      }
    }
    RngStream noise_rng(spec.seed, tag + "/noise");
    for (std::uint32_t n = 0; n < spec.per_subject; ++n) {
      const std::uint32_t c = n % spec.classes;
      // Every subject sees the same clean template; only M_s and noise vary.
      Eigen::RowVectorXd clean = templates[c].transpose();
      if (mixing) clean = clean * mix;
      for (std::uint32_t t = 0; t < spec.window; ++t) {
        for (int f = 0; f < F; ++f) {
          const double noise = noise_sd > 0.0 ? noise_sd * noise_rng.normal() : 0.0;
          out.samples.values.push_back(static_cast<float>(clean(f) + noise));
        }
      }
      out.labels.push_back(static_cast<std::uint8_t>(c));
      out.subjects.push_back(static_cast<std::uint8_t>(s));
    }
  }
  for (std::uint32_t c = 0; c < spec.classes; ++c) {
    const auto [region, band] = synth_class_block(c);
    out.class_names.push_back(std::string(region_name(static_cast<RegionId>(region))) + "_" +
                              std::string(band_name(band)));
  }
  out.provenance = "synthetic subjects=" + std::to_string(spec.subjects) +
                   " classes=" + std::to_string(spec.classes) +
                   " per_subject=" + std::to_string(spec.per_subject) +
                   " window=" + std::to_string(spec.window) + " snr=" + format_double(spec.snr) +
                   " shift=" + format_double(spec.shift) + " seed=" + std::to_string(spec.seed);
  return out;
}

std::string encode_dataset(const Dataset& d) {
  if (auto v = validate_dataset(d); !v.empty()) {
    // Missing subjects are legal in subsets; everything else is not.
    for (const auto& msg : v) {
      if (msg.find("has no samples") == std::string::npos) throw PreconditionError("encode_dataset: " + msg);
    }
  }
  std::string out;
  out.reserve(kHeaderBytes + d.samples.values.size() * 4 + 2 * d.size());
  out.append("RSMC");
  out.push_back(static_cast<char>(kContainerVersion));
  le::put_u32(out, d.samples.batch);
  le::put_u32(out, d.samples.time);
  le::put_u32(out, d.samples.features);
  le::put_u32(out, d.classes);
  le::put_u32(out, d.subject_count);
  for (float x : d.samples.values) le::put_f32(out, x);
  for (auto c : d.labels) out.push_back(static_cast<char>(c));
  for (auto s : d.subjects) out.push_back(static_cast<char>(s));
  return out;
}

Dataset decode_dataset(std::span<const unsigned char> bytes) {
  const std::size_t size = bytes.size();
  if (size < 4 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "RSMC") {
    throw ParseError("malformed header: missing RSMC magic", 0);
  }
  if (size < 5) throw ParseError("malformed header: truncated before version byte", size);
  if (bytes[4] != kContainerVersion) {
    throw ParseError("malformed header: unsupported version " + std::to_string(bytes[4]), 4);
  }
  if (size < kHeaderBytes) throw ParseError("malformed header: truncated dimension fields", size);

  Dataset d;
  const unsigned char* p = bytes.data();
  d.samples.batch = le::get_u32(p + 5);
  d.samples.time = le::get_u32(p + 9);
  d.samples.features = le::get_u32(p + 13);
  d.classes = le::get_u32(p + 17);
  d.subject_count = le::get_u32(p + 21);
  const std::uint64_t rows = static_cast<std::uint64_t>(d.samples.batch) * d.samples.time;
  const std::uint64_t floats = rows * d.samples.features;
  const std::uint64_t expected = kHeaderBytes + floats * 4 + 2ull * d.samples.batch;

  if (size != expected) {
    const std::uint64_t body = size - kHeaderBytes;
    const std::uint64_t tail = 2ull * d.samples.batch;
    if (rows > 0 && body > tail && (body - tail) % (4 * rows) == 0) {
      const std::uint64_t actual_f = (body - tail) / (4 * rows);
      throw ParseError("dimension mismatch: header declares F=" + std::to_string(d.samples.features) +
                           " but payload holds " + std::to_string(actual_f) + " floats per row",
                       kHeaderBytes);
    }
    if (size < expected) throw ParseError("truncated file: expected " + std::to_string(expected) + " bytes", size);
    throw ParseError("dimension mismatch: " + std::to_string(size - expected) + " trailing bytes", expected);
  }

  d.samples.values.resize(floats);
  for (std::uint64_t i = 0; i < floats; ++i) {
    const std::size_t off = kHeaderBytes + 4 * i;
    const float x = le::get_f32(p + off);
    if (!std::isfinite(x)) throw ParseError("non-finite feature value", off);
    d.samples.values[i] = x;
  }
  const std::size_t label_off = kHeaderBytes + floats * 4;
  const std::size_t subject_off = label_off + d.samples.batch;
  d.labels.assign(p + label_off, p + subject_off);
  d.subjects.assign(p + subject_off, p + subject_off + d.samples.batch);
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] >= d.classes) throw ParseError("label out of range", label_off + i);
    if (d.subjects[i] >= d.subject_count) throw ParseError("subject id out of range", subject_off + i);
  }
  for (std::uint32_t c = 0; c < d.classes; ++c) d.class_names.push_back("class_" + std::to_string(c));
  return d;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  const std::string bytes = encode_dataset(data);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  nlohmann::ordered_json side = {{"format", "rsmc-dataset"},
                                 {"version", kContainerVersion},
                                 {"class_names", data.class_names},
                                 {"provenance", data.provenance}};
  std::ofstream out(sidecar_path(path), std::ios::trunc);
  if (!out) throw IoError("cannot write '" + sidecar_path(path).string() + "'");
  out << side.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Dataset d = decode_dataset(
      std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    std::ifstream s(side);
    try {
      const auto doc = nlohmann::json::parse(s);
      auto names = doc.at("class_names").get<std::vector<std::string>>();
      if (names.size() == d.classes) d.class_names = std::move(names);
      d.provenance = doc.value("provenance", std::string());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("dataset sidecar '" + side.string() + "': " + e.what(), 0);
    }
  }
  return d;
}

}  // namespace rsmc
