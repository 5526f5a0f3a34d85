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

// Reverse-mode tape over dense matrices.
//
// Every recorded node owns its forward value; gradients are allocated on
// first use during backward(). Nodes are appended in evaluation order, so a
// reverse sweep over the node list is a valid topological order.

#ifndef RSMC_TAPE_HPP_
#define RSMC_TAPE_HPP_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "rsmc/error.hpp"
#include "rsmc/params.hpp"

namespace rsmc {

struct Var {
  std::uint32_t id = 0;
};

template <typename S>
class Tape {
 public:
  // Called with the tape and the id of the node whose gradient is ready.
  using Backward = std::function<void(Tape&, std::uint32_t)>;

  Var constant(Matrix<S> value) { return push(std::move(value), false, nullptr, nullptr); }

  // Leaf bound to a parameter; its gradient is added to param.grad.
  Var parameter(Parameter<S>& param) {
    const bool trainable = param.trainable;
    return push(param.value, trainable, nullptr, trainable ? &param : nullptr);
  }

  Var record(Matrix<S> value, std::initializer_list<Var> inputs, Backward backward) {
    bool any = false;
    for (Var v : inputs) any = any || nodes_[v.id].requires_grad;
    return push(std::move(value), any, any ? std::move(backward) : nullptr, nullptr);
  }

  // Variant for ops with a runtime-sized input list.
  Var record(Matrix<S> value, const std::vector<Var>& inputs, Backward backward) {
    bool any = false;
    for (Var v : inputs) any = any || nodes_[v.id].requires_grad;
    return push(std::move(value), any, any ? std::move(backward) : nullptr, nullptr);
  }

  const Matrix<S>& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Gradient buffer of a node, zero-initialised on first access.
  Matrix<S>& grad(Var v) { return grad(v.id); }
  Matrix<S>& grad(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
      n.grad = Matrix<S>::Zero(n.value.rows(), n.value.cols());
    }
    return n.grad;
  }

  // Seeds d(root)/d(root) = 1 and propagates to every parameter leaf.
  void backward(Var root) {
    const Matrix<S>& v = value(root);
    if (v.rows() != 1 || v.cols() != 1) {
      throw DimensionError("backward root must be 1x1, got " + std::to_string(v.rows()) + "x" +
                           std::to_string(v.cols()));
    }
    if (!nodes_[root.id].requires_grad) return;
    grad(root).setConstant(S(1));
    for (std::int64_t i = root.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.param != nullptr) {
        n.param->grad += n.grad;
      } else if (n.backward) {
        n.backward(*this, static_cast<std::uint32_t>(i));
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<S> value;
    Matrix<S> grad;
    Backward backward;
    Parameter<S>* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Matrix<S> value, bool requires_grad, Backward backward, Parameter<S>* param) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(backward);
    n.param = param;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
};

}  // namespace rsmc

#endif  // RSMC_TAPE_HPP_
