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

#ifndef RSMC_PARAMS_HPP_
#define RSMC_PARAMS_HPP_

#include <Eigen/Core>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rsmc/error.hpp"

namespace rsmc {

// Row-major so that (B*T, N*D) and (B*T*N, D) views share one buffer.
using Index = Eigen::Index;

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
struct Parameter {
  std::string path;
  Matrix<S> value;
  Matrix<S> grad;
  // Non-trainable entries (batch-norm running statistics) are checkpointed
  // but skipped by the optimizer and the gradient checker.
  bool trainable = true;
};

// Named parameters addressable by hierarchical path ("rgrm/W_q").
// Entries have stable addresses for the lifetime of the store.
template <typename S>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other) { *this = other; }
  ParamStore& operator=(const ParamStore& other) {
    if (this == &other) return *this;
    params_.clear();
    index_.clear();
    for (const auto& p : other.params_) {
      auto& added = add(p->path, p->value, p->trainable);
      added.grad = p->grad;
    }
    return *this;
  }
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter<S>& add(std::string path, Matrix<S> init, bool trainable = true) {
    if (index_.count(path) != 0) {
      throw Error("duplicate parameter path '" + path + "'");
    }
    auto p = std::make_unique<Parameter<S>>();
    p->path = path;
    p->grad = Matrix<S>::Zero(init.rows(), init.cols());
    p->value = std::move(init);
    p->trainable = trainable;
    index_.emplace(std::move(path), params_.size());
    params_.push_back(std::move(p));
    return *params_.back();
  }

  bool contains(std::string_view path) const {
    return index_.find(std::string(path)) != index_.end();
  }

  Parameter<S>& at(std::string_view path) {
    auto it = index_.find(std::string(path));
    if (it == index_.end()) throw LookupError("unknown parameter '" + std::string(path) + "'");
    return *params_[it->second];
  }
  const Parameter<S>& at(std::string_view path) const {
    return const_cast<ParamStore*>(this)->at(path);
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  // Copies values (not gradients) from a store with identical layout.
  void assign_values(const ParamStore& other) {
    for (const auto& p : other.params_) at(p->path).value = p->value;
  }

  std::size_t size() const { return params_.size(); }
  Parameter<S>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<S>& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const auto& p : params_) out.add(p->path, p->value.template cast<T>(), p->trainable);
    return out;
  }

 private:
  std::vector<std::unique_ptr<Parameter<S>>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace rsmc

#endif  // RSMC_PARAMS_HPP_
