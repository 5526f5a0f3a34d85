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

#include "rsmc/exports.hpp"

#include <fstream>
#include <iomanip>
#include <regex>

#include "json.hpp"
#include "rsmc/error.hpp"
#include "rsmc/loso.hpp"
#include "rsmc/mstt.hpp"
#include "rsmc/topology.hpp"
#include "rsmc/trainer.hpp"

namespace rsmc {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << std::setprecision(9);
  return out;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing run artifact '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("run artifact '" + path.string() + "': " + e.what(), e.byte);
  }
}

// Folds of a run directory, ordered by subject id.
std::vector<int> fold_subjects(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) throw IoError("run directory '" + run_dir.string() + "' not found");
  static const std::regex pattern("fold_([0-9]+)");
  std::vector<int> subjects;
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && std::regex_match(name, m, pattern)) subjects.push_back(std::stoi(m[1]));
  }
  std::sort(subjects.begin(), subjects.end());
  return subjects;
}

}  // namespace

void write_mask_csv(std::ostream& out, const Matrix<double>& mask) {
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) out << (j ? "," : "") << (is_masked(mask(i, j)) ? 0 : 1);
    out << '\n';
  }
}

void write_spatial_attention_csv(std::ostream& out, const Matrix<float>& attention, const Dataset& data) {
  if (attention.rows() != static_cast<Index>(data.size()) || attention.cols() != kFeatureCount) {
    throw DimensionError("spatial attention must be " + std::to_string(data.size()) + " x " +
                         std::to_string(kFeatureCount));
  }
  out << "sample,subject,label";
  for (const auto& e : electrodes()) {
    for (int b = 0; b < kBandCount; ++b) out << ',' << e.label << '_' << band_name(b);
  }
  out << '\n';
  for (Index i = 0; i < attention.rows(); ++i) {
    out << i << ',' << static_cast<int>(data.subjects[static_cast<std::size_t>(i)]) << ','
        << static_cast<int>(data.labels[static_cast<std::size_t>(i)]);
    for (Index f = 0; f < attention.cols(); ++f) out << ',' << attention(i, f);
    out << '\n';
  }
}

void write_confusion_csv(std::ostream& out, const std::vector<std::vector<double>>& normalized) {
  out << "true\\pred";
  for (std::size_t j = 0; j < normalized.size(); ++j) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    out << i;
    for (double v : normalized[i]) out << ',' << v;
    out << '\n';
  }
}

std::filesystem::path export_spatial_attention(const std::filesystem::path& run_dir, int subject,
                                               const Dataset& data) {
  FoldArtifacts fold = load_fold_artifacts(run_dir, subject);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.subjects[i] == subject) idx.push_back(i);
  }
  if (idx.empty()) throw PreconditionError("dataset has no samples of subject " + std::to_string(subject));
  Dataset target = subset(data, idx);
  apply_minmax(target, fold.stats);
  Matrix<float> attention;
  predict(fold.params, fold.model, target, &attention);
  const auto path = run_dir / "exports" / ("spatial_attention_" + fold_dir_name(subject) + ".csv");
  auto out = open_out(path);
  write_spatial_attention_csv(out, attention, target);
  return path;
}

std::vector<std::filesystem::path> export_confusion(const std::filesystem::path& run_dir) {
  const auto subjects = fold_subjects(run_dir);
  if (subjects.empty()) throw IoError("no fold directories under '" + run_dir.string() + "'");
  std::vector<std::filesystem::path> written;
  Confusion total;
  for (int s : subjects) {
    const auto report = read_json(run_dir / fold_dir_name(s) / "report.json");
    const auto confusion = report.at("confusion").get<Confusion>();
    if (total.empty()) total.assign(confusion.size(), std::vector<std::size_t>(confusion.size(), 0));
    for (std::size_t i = 0; i < confusion.size(); ++i) {
      for (std::size_t j = 0; j < confusion[i].size(); ++j) total[i][j] += confusion[i][j];
    }
    const auto path = run_dir / "exports" / ("confusion_" + fold_dir_name(s) + ".csv");
    auto out = open_out(path);
    write_confusion_csv(out, row_normalize(confusion));
    written.push_back(path);
  }
  const auto path = run_dir / "exports" / "confusion_all.csv";
  auto out = open_out(path);
  write_confusion_csv(out, row_normalize(total));
  written.push_back(path);
  return written;
}

std::vector<std::filesystem::path> export_masks(const std::filesystem::path& run_dir) {
  const auto subjects = fold_subjects(run_dir);
  if (subjects.empty()) throw IoError("no fold directories under '" + run_dir.string() + "'");
  const auto doc = read_json(run_dir / fold_dir_name(subjects.front()) / "model_config.json");
  const auto& m = doc.at("model");
  const Index t = m.at("time").get<Index>();
  const auto local = run_dir / "exports" / "local_mask.csv";
  const auto sparse = run_dir / "exports" / "sparse_mask.csv";
  {
    auto out = open_out(local);
    write_mask_csv(out, build_local_mask<double>(t, m.at("local_window").get<Index>()));
  }
  auto out = open_out(sparse);
  write_mask_csv(out, build_sparse_mask<double>(t, m.at("sparse_period").get<Index>()));
  return {local, sparse};
}

}  // namespace rsmc
