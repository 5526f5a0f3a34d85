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

#include "rsmc/align.hpp"

#include <algorithm>
#include <charconv>
#include <string_view>

namespace rsmc {
namespace {

constexpr std::string_view kPrefix = "align/W_s/";

}  // namespace

std::string alignment_path(int subject) { return std::string(kPrefix) + std::to_string(subject); }

template <typename S>
void add_alignment_bank(ParamStore<S>& store, std::span<const int> subjects, Index features) {
  for (int s : subjects) store.add(alignment_path(s), Matrix<S>::Identity(features, features));
}

template <typename S>
std::vector<int> alignment_subjects(const ParamStore<S>& store) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::string_view path = store[i].path;
    if (!path.starts_with(kPrefix)) continue;
    path.remove_prefix(kPrefix.size());
    int id = 0;
    auto [end, ec] = std::from_chars(path.data(), path.data() + path.size(), id);
    if (ec == std::errc() && end == path.data() + path.size()) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

template <typename S>
Matrix<S> alignment_mean(const ParamStore<S>& store) {
  const auto ids = alignment_subjects(store);
  if (ids.empty()) throw PreconditionError("alignment bank is empty");
  Matrix<S> mean = store.at(alignment_path(ids.front())).value;
  for (std::size_t i = 1; i < ids.size(); ++i) mean += store.at(alignment_path(ids[i])).value;
  mean /= static_cast<S>(ids.size());
  return mean;
}

template <typename S>
Var calibrate_train(Tape<S>& tape, ParamStore<S>& store, Var x, std::span<const int> sample_subjects,
                    Index time) {
  const Index rows = tape.value(x).rows();
  if (time <= 0 || rows != static_cast<Index>(sample_subjects.size()) * time) {
    throw DimensionError("calibrate_train: " + std::to_string(rows) + " rows do not match " +
                         std::to_string(sample_subjects.size()) + " samples x " + std::to_string(time) +
                         " steps");
  }
  std::vector<int> bank_ids;
  std::vector<Var> mats;
  std::vector<int> row_group(static_cast<std::size_t>(rows));
  for (std::size_t b = 0; b < sample_subjects.size(); ++b) {
    const int s = sample_subjects[b];
    auto it = std::find(bank_ids.begin(), bank_ids.end(), s);
    std::size_t g = static_cast<std::size_t>(it - bank_ids.begin());
    if (it == bank_ids.end()) {
      if (!store.contains(alignment_path(s))) {
        throw LookupError("no alignment matrix for subject " + std::to_string(s));
      }
      bank_ids.push_back(s);
      mats.push_back(tape.parameter(store.at(alignment_path(s))));
    }
    for (Index t = 0; t < time; ++t) row_group[b * static_cast<std::size_t>(time) + static_cast<std::size_t>(t)] = static_cast<int>(g);
  }
  return ops::grouped_matmul(tape, x, row_group, mats);
}

template <typename S>
Var calibrate_test(Tape<S>& tape, const ParamStore<S>& store, Var x) {
  return ops::matmul(tape, x, tape.constant(alignment_mean(store)));
}

#define RSMC_INSTANTIATE(S)                                                                   \
  template void add_alignment_bank<S>(ParamStore<S>&, std::span<const int>, Index);           \
  template std::vector<int> alignment_subjects<S>(const ParamStore<S>&);                      \
  template Matrix<S> alignment_mean<S>(const ParamStore<S>&);                                 \
  template Var calibrate_train<S>(Tape<S>&, ParamStore<S>&, Var, std::span<const int>, Index); \
  template Var calibrate_test<S>(Tape<S>&, const ParamStore<S>&, Var);
RSMC_INSTANTIATE(float)
RSMC_INSTANTIATE(double)
#undef RSMC_INSTANTIATE

}  // namespace rsmc
