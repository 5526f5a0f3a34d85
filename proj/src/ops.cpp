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

#include "rsmc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace rsmc::ops {
namespace {

template <typename S>
std::string shape_of(const Matrix<S>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

template <typename S>
[[noreturn]] void shape_error(const char* op, const char* a_name, const Matrix<S>& a,
                              const char* b_name, const Matrix<S>& b) {
  throw DimensionError(std::string(op) + ": " + a_name + " is " + shape_of(a) + ", " + b_name +
                       " is " + shape_of(b));
}

template <typename S>
void require_same_shape(const char* op, const Matrix<S>& a, const Matrix<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, "lhs", a, "rhs", b);
}

template <typename S>
S sigmoid_scalar(S x) {
  if (x >= S(0)) {
    const S z = std::exp(-x);
    return S(1) / (S(1) + z);
  }
  const S z = std::exp(x);
  return z / (S(1) + z);
}

}  // namespace

template <typename S>
Var matmul(Tape<S>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols() != B.rows()) shape_error("matmul", "a", A, "b", B);
  Matrix<S> y = A * B;
  return t.record(std::move(y), {a, b}, [a, b](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a).noalias() += gy * tp.value(b).transpose();
    if (tp.requires_grad(b)) tp.grad(b).noalias() += tp.value(a).transpose() * gy;
  });
}

template <typename S>
Var linear(Tape<S>& t, Var x, Var w) {
  const auto& X = t.value(x);
  const auto& W = t.value(w);
  if (X.cols() != W.cols()) shape_error("linear", "x", X, "W", W);
  Matrix<S> y = X * W.transpose();
  return t.record(std::move(y), {x, w}, [x, w](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(x)) tp.grad(x).noalias() += gy * tp.value(w);
    if (tp.requires_grad(w)) tp.grad(w).noalias() += gy.transpose() * tp.value(x);
  });
}

template <typename S>
Var linear(Tape<S>& t, Var x, Var w, Var b) {
  const auto& X = t.value(x);
  const auto& W = t.value(w);
  const auto& Bv = t.value(b);
  if (X.cols() != W.cols()) shape_error("linear", "x", X, "W", W);
  if (Bv.rows() != 1 || Bv.cols() != W.rows()) shape_error("linear", "W", W, "b", Bv);
  Matrix<S> y = X * W.transpose();
  y.rowwise() += Bv.row(0);
  return t.record(std::move(y), {x, w, b}, [x, w, b](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(x)) tp.grad(x).noalias() += gy * tp.value(w);
    if (tp.requires_grad(w)) tp.grad(w).noalias() += gy.transpose() * tp.value(x);
    if (tp.requires_grad(b)) tp.grad(b) += gy.colwise().sum();
  });
}

template <typename S>
Var add(Tape<S>& t, Var a, Var b) {
  require_same_shape("add", t.value(a), t.value(b));
  Matrix<S> y = t.value(a) + t.value(b);
  return t.record(std::move(y), {a, b}, [a, b](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a) += gy;
    if (tp.requires_grad(b)) tp.grad(b) += gy;
  });
}

template <typename S>
Var sub(Tape<S>& t, Var a, Var b) {
  require_same_shape("sub", t.value(a), t.value(b));
  Matrix<S> y = t.value(a) - t.value(b);
  return t.record(std::move(y), {a, b}, [a, b](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a) += gy;
    if (tp.requires_grad(b)) tp.grad(b) -= gy;
  });
}

template <typename S>
Var add_row(Tape<S>& t, Var x, Var row) {
  const auto& X = t.value(x);
  const auto& R = t.value(row);
  if (R.rows() != 1 || R.cols() != X.cols()) shape_error("add_row", "x", X, "row", R);
  Matrix<S> y = X;
  y.rowwise() += R.row(0);
  return t.record(std::move(y), {x, row}, [x, row](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(x)) tp.grad(x) += gy;
    if (tp.requires_grad(row)) tp.grad(row) += gy.colwise().sum();
  });
}

template <typename S>
Var scale(Tape<S>& t, Var x, S factor) {
  Matrix<S> y = t.value(x) * factor;
  return t.record(std::move(y), {x}, [x, factor](Tape<S>& tp, std::uint32_t self) {
    tp.grad(x) += tp.grad(self) * factor;
  });
}

template <typename S>
Var blend(Tape<S>& t, Var gate, Var a, Var b) {
  const auto& G = t.value(gate);
  if (G.rows() != 1 || G.cols() != 1) shape_error("blend", "gate", G, "a", t.value(a));
  require_same_shape("blend", t.value(a), t.value(b));
  const S g = G(0, 0);
  Matrix<S> y = g * t.value(a) + (S(1) - g) * t.value(b);
  return t.record(std::move(y), {gate, a, b}, [gate, a, b, g](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a) += g * gy;
    if (tp.requires_grad(b)) tp.grad(b) += (S(1) - g) * gy;
    if (tp.requires_grad(gate)) {
      tp.grad(gate)(0, 0) += (gy.array() * (tp.value(a) - tp.value(b)).array()).sum();
    }
  });
}

template <typename S>
Var sigmoid(Tape<S>& t, Var x) {
  Matrix<S> y = t.value(x).unaryExpr([](S v) { return sigmoid_scalar(v); });
  return t.record(std::move(y), {x}, [x](Tape<S>& tp, std::uint32_t self) {
    // The node's own value is sigma(x).
    const auto& s = tp.value(Var{self});
    tp.grad(x).array() += tp.grad(self).array() * s.array() * (S(1) - s.array());
  });
}

template <typename S>
Var tanh(Tape<S>& t, Var x) {
  Matrix<S> y = t.value(x).array().tanh().matrix();
  return t.record(std::move(y), {x}, [x](Tape<S>& tp, std::uint32_t self) {
    const auto& th = tp.value(Var{self});
    tp.grad(x).array() += tp.grad(self).array() * (S(1) - th.array().square());
  });
}

template <typename S>
Var relu(Tape<S>& t, Var x) {
  Matrix<S> y = t.value(x).cwiseMax(S(0));
  return t.record(std::move(y), {x}, [x](Tape<S>& tp, std::uint32_t self) {
    const auto& X = tp.value(x);
    tp.grad(x).array() += (X.array() > S(0)).select(tp.grad(self).array(), S(0));
  });
}

template <typename S>
Var layer_norm(Tape<S>& t, Var x, Var gain, Var bias, S eps) {
  const auto& X = t.value(x);
  const auto& G = t.value(gain);
  const auto& Bv = t.value(bias);
  const Index n = X.cols();
  if (n < 2) throw PreconditionError("layer_norm: normalisation axis length must be >= 2");
  if (G.rows() != 1 || G.cols() != n) shape_error("layer_norm", "x", X, "gain", G);
  if (Bv.rows() != 1 || Bv.cols() != n) shape_error("layer_norm", "x", X, "bias", Bv);

  auto xhat = std::make_shared<Matrix<S>>(X.rows(), n);
  auto rstd = std::make_shared<Eigen::Matrix<S, Eigen::Dynamic, 1>>(X.rows());
  for (Index r = 0; r < X.rows(); ++r) {
    const S mu = X.row(r).mean();
    const S var = (X.row(r).array() - mu).square().mean();
    const S inv = S(1) / std::sqrt(var + eps);
    (*rstd)(r) = inv;
    xhat->row(r) = (X.row(r).array() - mu) * inv;
  }
  Matrix<S> y = xhat->array().rowwise() * G.row(0).array();
  y.rowwise() += Bv.row(0);
  return t.record(std::move(y), {x, gain, bias},
                  [x, gain, bias, xhat, rstd](Tape<S>& tp, std::uint32_t self) {
                    const auto& gy = tp.grad(self);
                    const auto& Gv = tp.value(gain);
                    if (tp.requires_grad(gain)) {
                      tp.grad(gain) += (gy.array() * xhat->array()).colwise().sum().matrix();
                    }
                    if (tp.requires_grad(bias)) tp.grad(bias) += gy.colwise().sum();
                    if (tp.requires_grad(x)) {
                      auto& gx = tp.grad(x);
                      const S inv_n = S(1) / static_cast<S>(xhat->cols());
                      for (Index r = 0; r < gy.rows(); ++r) {
                        const auto dxh = (gy.row(r).array() * Gv.row(0).array()).eval();
                        const S m1 = dxh.sum() * inv_n;
                        const S m2 = (dxh * xhat->row(r).array()).sum() * inv_n;
                        gx.row(r).array() += (*rstd)(r) * (dxh - m1 - xhat->row(r).array() * m2);
                      }
                    }
                  });
}

template <typename S>
Var batch_norm(Tape<S>& t, Var x, Var gamma, Var beta, Matrix<S>& running_mean,
               Matrix<S>& running_var, S momentum, S eps, bool training) {
  const auto& X = t.value(x);
  const Index n = X.rows();
  const Index c = X.cols();
  const auto& Gm = t.value(gamma);
  const auto& Bt = t.value(beta);
  if (Gm.rows() != 1 || Gm.cols() != c) shape_error("batch_norm", "x", X, "gamma", Gm);
  if (Bt.rows() != 1 || Bt.cols() != c) shape_error("batch_norm", "x", X, "beta", Bt);
  if (running_mean.cols() != c || running_var.cols() != c) {
    shape_error("batch_norm", "x", X, "running_mean", running_mean);
  }

  auto xhat = std::make_shared<Matrix<S>>(n, c);
  auto rstd = std::make_shared<Matrix<S>>(1, c);
  if (training) {
    if (n < 2) throw PreconditionError("batch_norm: training mode needs at least 2 rows");
    const Matrix<S> mu = X.colwise().mean();
    const Matrix<S> centered = X.rowwise() - mu.row(0);
    const Matrix<S> var = centered.array().square().colwise().mean();
    *rstd = (var.array() + eps).rsqrt();
    *xhat = centered.array().rowwise() * rstd->row(0).array();
    const S unbias = static_cast<S>(n) / static_cast<S>(n - 1);
    running_mean = (S(1) - momentum) * running_mean + momentum * mu;
    running_var = (S(1) - momentum) * running_var + momentum * unbias * var;
  } else {
    *rstd = (running_var.array() + eps).rsqrt();
    *xhat = (X.rowwise() - running_mean.row(0)).array().rowwise() * rstd->row(0).array();
  }
  Matrix<S> y = xhat->array().rowwise() * Gm.row(0).array();
  y.rowwise() += Bt.row(0);
  return t.record(std::move(y), {x, gamma, beta},
                  [x, gamma, beta, xhat, rstd, training](Tape<S>& tp, std::uint32_t self) {
                    const auto& gy = tp.grad(self);
                    const auto& Gv = tp.value(gamma);
                    if (tp.requires_grad(gamma)) {
                      tp.grad(gamma) += (gy.array() * xhat->array()).colwise().sum().matrix();
                    }
                    if (tp.requires_grad(beta)) tp.grad(beta) += gy.colwise().sum();
                    if (!tp.requires_grad(x)) return;
                    const Matrix<S> dxh = gy.array().rowwise() * Gv.row(0).array();
                    if (!training) {
                      tp.grad(x).array() += dxh.array().rowwise() * rstd->row(0).array();
                      return;
                    }
                    const S inv_n = S(1) / static_cast<S>(dxh.rows());
                    const Matrix<S> m1 = dxh.colwise().sum() * inv_n;
                    const Matrix<S> m2 =
                        (dxh.array() * xhat->array()).colwise().sum().matrix() * inv_n;
                    Matrix<S> gx = dxh.rowwise() - m1.row(0);
                    gx.array() -= xhat->array().rowwise() * m2.row(0).array();
                    tp.grad(x).array() += gx.array().rowwise() * rstd->row(0).array();
                  });
}

template <typename S>
Var softmax_rows(Tape<S>& t, Var x) {
  const auto& X = t.value(x);
  Matrix<S> y(X.rows(), X.cols());
  for (Index r = 0; r < X.rows(); ++r) {
    const S m = X.row(r).maxCoeff();
    y.row(r) = (X.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return t.record(std::move(y), {x}, [x](Tape<S>& tp, std::uint32_t self) {
    const auto& p = tp.value(Var{self});
    const auto& gy = tp.grad(self);
    auto& gx = tp.grad(x);
    for (Index r = 0; r < p.rows(); ++r) {
      const S dot = (gy.row(r).array() * p.row(r).array()).sum();
      gx.row(r).array() += p.row(r).array() * (gy.row(r).array() - dot);
    }
  });
}

template <typename S>
Var log_softmax_rows(Tape<S>& t, Var x) {
  const auto& X = t.value(x);
  Matrix<S> y(X.rows(), X.cols());
  for (Index r = 0; r < X.rows(); ++r) {
    const S m = X.row(r).maxCoeff();
    const S lse = m + std::log((X.row(r).array() - m).exp().sum());
    y.row(r) = X.row(r).array() - lse;
  }
  return t.record(std::move(y), {x}, [x](Tape<S>& tp, std::uint32_t self) {
    const auto& lp = tp.value(Var{self});
    const auto& gy = tp.grad(self);
    auto& gx = tp.grad(x);
    for (Index r = 0; r < lp.rows(); ++r) {
      const S total = gy.row(r).sum();
      gx.row(r).array() += gy.row(r).array() - lp.row(r).array().exp() * total;
    }
  });
}

template <typename S>
Var dropout(Tape<S>& t, Var x, double rate, bool training, RngStream& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw PreconditionError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const auto& X = t.value(x);
  auto keep = std::make_shared<Matrix<S>>(X.rows(), X.cols());
  const S survivor = static_cast<S>(1.0 / (1.0 - rate));
  for (Index i = 0; i < keep->size(); ++i) {
    keep->data()[i] = rng.uniform() >= rate ? survivor : S(0);
  }
  Matrix<S> y = X.cwiseProduct(*keep);
  return t.record(std::move(y), {x}, [x, keep](Tape<S>& tp, std::uint32_t self) {
    tp.grad(x) += tp.grad(self).cwiseProduct(*keep);
  });
}

template <typename S>
Var reshape(Tape<S>& t, Var x, Index rows, Index cols) {
  const auto& X = t.value(x);
  if (rows * cols != X.size()) {
    throw DimensionError("reshape: cannot view " + shape_of(X) + " as " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  }
  Matrix<S> y = Eigen::Map<const Matrix<S>>(X.data(), rows, cols);
  return t.record(std::move(y), {x}, [x](Tape<S>& tp, std::uint32_t self) {
    auto& gx = tp.grad(x);
    const auto& gy = tp.grad(self);
    Eigen::Map<Matrix<S>>(gx.data(), gy.rows(), gy.cols()) += gy;
  });
}

template <typename S>
Var concat_cols(Tape<S>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.rows() != B.rows()) shape_error("concat_cols", "a", A, "b", B);
  Matrix<S> y(A.rows(), A.cols() + B.cols());
  y.leftCols(A.cols()) = A;
  y.rightCols(B.cols()) = B;
  const Index ca = A.cols();
  const Index cb = B.cols();
  return t.record(std::move(y), {a, b}, [a, b, ca, cb](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a) += gy.leftCols(ca);
    if (tp.requires_grad(b)) tp.grad(b) += gy.rightCols(cb);
  });
}

template <typename S>
Var gather_rows(Tape<S>& t, Var x, std::vector<Index> rows) {
  const auto& X = t.value(x);
  Matrix<S> y(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= X.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) + " outside " +
                           shape_of(X));
    }
    y.row(static_cast<Index>(i)) = X.row(rows[i]);
  }
  auto idx = std::make_shared<std::vector<Index>>(std::move(rows));
  return t.record(std::move(y), {x}, [x, idx](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    auto& gx = tp.grad(x);
    for (std::size_t i = 0; i < idx->size(); ++i) gx.row((*idx)[i]) += gy.row(static_cast<Index>(i));
  });
}

template <typename S>
Var segment_mean(Tape<S>& t, Var x, Index group) {
  const auto& X = t.value(x);
  if (group <= 0 || X.rows() % group != 0) {
    throw DimensionError("segment_mean: " + std::to_string(X.rows()) +
                         " rows not divisible into groups of " + std::to_string(group));
  }
  const Index g = X.rows() / group;
  Matrix<S> y(g, X.cols());
  for (Index i = 0; i < g; ++i) y.row(i) = X.middleRows(i * group, group).colwise().mean();
  return t.record(std::move(y), {x}, [x, group](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    auto& gx = tp.grad(x);
    const S inv = S(1) / static_cast<S>(group);
    for (Index i = 0; i < gy.rows(); ++i) {
      gx.middleRows(i * group, group).rowwise() += gy.row(i) * inv;
    }
  });
}

template <typename S>
Var repeat_rows(Tape<S>& t, Var x, Index times) {
  const auto& X = t.value(x);
  if (times <= 0) throw DimensionError("repeat_rows: times must be positive");
  Matrix<S> y(X.rows() * times, X.cols());
  for (Index i = 0; i < X.rows(); ++i) y.middleRows(i * times, times).rowwise() = X.row(i);
  return t.record(std::move(y), {x}, [x, times](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    auto& gx = tp.grad(x);
    for (Index i = 0; i < gx.rows(); ++i) gx.row(i) += gy.middleRows(i * times, times).colwise().sum();
  });
}

template <typename S>
Var weighted_segment_sum(Tape<S>& t, Var weights, Var x) {
  const auto& W = t.value(weights);
  const auto& X = t.value(x);
  const Index b = W.rows();
  const Index steps = W.cols();
  if (X.rows() != b * steps) shape_error("weighted_segment_sum", "weights", W, "x", X);
  Matrix<S> z(b, X.cols());
  for (Index i = 0; i < b; ++i) z.row(i) = W.row(i) * X.middleRows(i * steps, steps);
  return t.record(std::move(z), {weights, x}, [weights, x, steps](Tape<S>& tp, std::uint32_t self) {
    const auto& gz = tp.grad(self);
    const auto& Wv = tp.value(weights);
    const auto& Xv = tp.value(x);
    for (Index i = 0; i < gz.rows(); ++i) {
      if (tp.requires_grad(weights)) {
        tp.grad(weights).row(i).noalias() += gz.row(i) * Xv.middleRows(i * steps, steps).transpose();
      }
      if (tp.requires_grad(x)) {
        tp.grad(x).middleRows(i * steps, steps).noalias() += Wv.row(i).transpose() * gz.row(i);
      }
    }
  });
}

template <typename S>
Var sum(Tape<S>& t, Var x) {
  Matrix<S> y(1, 1);
  y(0, 0) = t.value(x).sum();
  return t.record(std::move(y), {x}, [x](Tape<S>& tp, std::uint32_t self) {
    tp.grad(x).array() += tp.grad(self)(0, 0);
  });
}

template <typename S>
Var mean(Tape<S>& t, Var x) {
  const auto n = static_cast<S>(t.value(x).size());
  Matrix<S> y(1, 1);
  y(0, 0) = t.value(x).sum() / n;
  return t.record(std::move(y), {x}, [x, n](Tape<S>& tp, std::uint32_t self) {
    tp.grad(x).array() += tp.grad(self)(0, 0) / n;
  });
}

template <typename S>
Var nll_loss(Tape<S>& t, Var logp, std::span<const int> labels) {
  const auto& L = t.value(logp);
  if (static_cast<Index>(labels.size()) != L.rows()) {
    throw DimensionError("nll_loss: " + std::to_string(labels.size()) + " labels for " +
                         shape_of(L) + " log-probabilities");
  }
  if (L.rows() == 0) throw PreconditionError("nll_loss: empty batch");
  auto lab = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  S total = 0;
  for (Index i = 0; i < L.rows(); ++i) {
    const int c = (*lab)[static_cast<std::size_t>(i)];
    if (c < 0 || c >= L.cols()) {
      throw PreconditionError("nll_loss: label " + std::to_string(c) + " out of range [0, " +
                              std::to_string(L.cols()) + ")");
    }
    total -= L(i, c);
  }
  Matrix<S> y(1, 1);
  y(0, 0) = total / static_cast<S>(L.rows());
  return t.record(std::move(y), {logp}, [logp, lab](Tape<S>& tp, std::uint32_t self) {
    auto& g = tp.grad(logp);
    const S scale = tp.grad(self)(0, 0) / static_cast<S>(g.rows());
    for (Index i = 0; i < g.rows(); ++i) g(i, (*lab)[static_cast<std::size_t>(i)]) -= scale;
  });
}

template <typename S>
Var grouped_matmul(Tape<S>& t, Var x, std::span<const int> row_group, const std::vector<Var>& mats) {
  const auto& X = t.value(x);
  if (static_cast<Index>(row_group.size()) != X.rows()) {
    throw DimensionError("grouped_matmul: " + std::to_string(row_group.size()) +
                         " group ids for " + shape_of(X));
  }
  if (mats.empty()) throw PreconditionError("grouped_matmul: no matrices");
  const Index out_cols = t.value(mats.front()).cols();
  for (Var m : mats) {
    const auto& M = t.value(m);
    if (M.rows() != X.cols() || M.cols() != out_cols) shape_error("grouped_matmul", "x", X, "W", M);
  }
  auto rows_of = std::make_shared<std::vector<std::vector<Index>>>(mats.size());
  for (Index r = 0; r < X.rows(); ++r) {
    const int g = row_group[static_cast<std::size_t>(r)];
    if (g < 0 || static_cast<std::size_t>(g) >= mats.size()) {
      throw LookupError("grouped_matmul: group id " + std::to_string(g) + " has no matrix");
    }
    (*rows_of)[static_cast<std::size_t>(g)].push_back(r);
  }
  Matrix<S> y(X.rows(), out_cols);
  for (std::size_t g = 0; g < mats.size(); ++g) {
    const auto& rows = (*rows_of)[g];
    if (rows.empty()) continue;
    Matrix<S> xg(static_cast<Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) xg.row(static_cast<Index>(i)) = X.row(rows[i]);
    const Matrix<S> yg = xg * t.value(mats[g]);
    for (std::size_t i = 0; i < rows.size(); ++i) y.row(rows[i]) = yg.row(static_cast<Index>(i));
  }
  std::vector<Var> inputs = mats;
  inputs.push_back(x);
  auto mats_copy = std::make_shared<std::vector<Var>>(mats);
  return t.record(std::move(y), inputs, [x, mats_copy, rows_of](Tape<S>& tp, std::uint32_t self) {
    const auto& gy = tp.grad(self);
    const auto& Xv = tp.value(x);
    for (std::size_t g = 0; g < mats_copy->size(); ++g) {
      const auto& rows = (*rows_of)[g];
      if (rows.empty()) continue;
      const Var m = (*mats_copy)[g];
      const auto n = static_cast<Index>(rows.size());
      Matrix<S> xg(n, Xv.cols());
      Matrix<S> gyg(n, gy.cols());
      for (Index i = 0; i < n; ++i) {
        xg.row(i) = Xv.row(rows[static_cast<std::size_t>(i)]);
        gyg.row(i) = gy.row(rows[static_cast<std::size_t>(i)]);
      }
      if (tp.requires_grad(m)) tp.grad(m).noalias() += xg.transpose() * gyg;
      if (tp.requires_grad(x)) {
        const Matrix<S> gxg = gyg * tp.value(m).transpose();
        auto& gx = tp.grad(x);
        for (Index i = 0; i < n; ++i) gx.row(rows[static_cast<std::size_t>(i)]) += gxg.row(i);
      }
    }
  });
}

template <typename S>
Matrix<S> masked_softmax(const Matrix<S>& logits, const Matrix<S>& mask) {
  if (mask.cols() != logits.cols() || mask.rows() == 0 || logits.rows() % mask.rows() != 0) {
    shape_error("masked_softmax", "logits", logits, "mask", mask);
  }
  Matrix<S> p = Matrix<S>::Zero(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const Index mr = r % mask.rows();
    S best = -std::numeric_limits<S>::infinity();
    bool any = false;
    for (Index c = 0; c < logits.cols(); ++c) {
      if (is_masked(mask(mr, c))) continue;
      any = true;
      best = std::max(best, logits(r, c) + mask(mr, c));
    }
    if (!any) {
      throw PreconditionError("masked_softmax: row " + std::to_string(r) + " is fully masked");
    }
    S total = 0;
    for (Index c = 0; c < logits.cols(); ++c) {
      if (is_masked(mask(mr, c))) continue;
      const S e = std::exp(logits(r, c) + mask(mr, c) - best);
      p(r, c) = e;
      total += e;
    }
    p.row(r) /= total;
  }
  return p;
}

namespace {

// Gradient of softmax-attention inputs for one (T x d) head block.
template <typename S, typename QB, typename KB, typename VB, typename GB>
void attention_block_backward(const Matrix<S>& p, const QB& q, const KB& k, const VB& v,
                              const GB& gout, S inv_scale, Matrix<S>* gq, Matrix<S>* gk,
                              Matrix<S>* gv) {
  // dP = dOut V^T ; dS = P .* (dP - rowsum(dP .* P)).
  const Matrix<S> dp = gout * v.transpose();
  Matrix<S> ds(p.rows(), p.cols());
  for (Index r = 0; r < p.rows(); ++r) {
    const S dot = (dp.row(r).array() * p.row(r).array()).sum();
    ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
  }
  if (gv) *gv = p.transpose() * gout;
  if (gq) *gq = ds * k * inv_scale;
  if (gk) *gk = ds.transpose() * q * inv_scale;
}

}  // namespace

template <typename S>
AttentionResult<S> masked_softmax_attention(Tape<S>& t, Var q, Var k, Var v, const Matrix<S>& mask,
                                            double d_k) {
  const auto& Q = t.value(q);
  const auto& K = t.value(k);
  const auto& V = t.value(v);
  if (Q.cols() != K.cols()) shape_error("attention", "Q", Q, "K", K);
  if (K.rows() != V.rows()) shape_error("attention", "K", K, "V", V);
  if (mask.rows() != Q.rows() || mask.cols() != K.rows()) shape_error("attention", "Q", Q, "mask", mask);
  if (!(d_k > 0.0)) throw PreconditionError("attention: d_k must be positive");
  const S inv_scale = static_cast<S>(1.0 / std::sqrt(d_k));
  const Matrix<S> logits = (Q * K.transpose()) * inv_scale;
  auto p = std::make_shared<Matrix<S>>(masked_softmax<S>(logits, mask));
  Matrix<S> out = (*p) * V;
  AttentionResult<S> result;
  result.weights = *p;
  result.output = t.record(std::move(out), {q, k, v}, [q, k, v, p, inv_scale](Tape<S>& tp, std::uint32_t self) {
    Matrix<S> gq, gk, gv;
    attention_block_backward<S>(*p, tp.value(q), tp.value(k), tp.value(v), tp.grad(self), inv_scale,
                                tp.requires_grad(q) ? &gq : nullptr,
                                tp.requires_grad(k) ? &gk : nullptr,
                                tp.requires_grad(v) ? &gv : nullptr);
    if (tp.requires_grad(q)) tp.grad(q) += gq;
    if (tp.requires_grad(k)) tp.grad(k) += gk;
    if (tp.requires_grad(v)) tp.grad(v) += gv;
  });
  return result;
}

template <typename S>
Var multihead_attention(Tape<S>& t, Var q, Var k, Var v, const Matrix<S>& mask, Index batch,
                        Index heads, std::vector<Matrix<S>>* weights_out) {
  const auto& Q = t.value(q);
  const auto& K = t.value(k);
  const auto& V = t.value(v);
  require_same_shape("multihead_attention", Q, K);
  require_same_shape("multihead_attention", K, V);
  const Index steps = mask.rows();
  if (mask.cols() != steps || batch * steps != Q.rows()) {
    shape_error("multihead_attention", "Q", Q, "mask", mask);
  }
  if (heads <= 0 || Q.cols() % heads != 0) {
    throw PreconditionError("multihead_attention: " + std::to_string(heads) +
                            " heads do not divide width " + std::to_string(Q.cols()));
  }
  const Index d = Q.cols() / heads;
  const S inv_scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(d)));
  auto probs = std::make_shared<std::vector<Matrix<S>>>();
  probs->reserve(static_cast<std::size_t>(batch * heads));
  Matrix<S> out(Q.rows(), Q.cols());
  for (Index b = 0; b < batch; ++b) {
    for (Index h = 0; h < heads; ++h) {
      const auto qb = Q.block(b * steps, h * d, steps, d);
      const auto kb = K.block(b * steps, h * d, steps, d);
      const auto vb = V.block(b * steps, h * d, steps, d);
      const Matrix<S> logits = (qb * kb.transpose()) * inv_scale;
      probs->push_back(masked_softmax<S>(logits, mask));
      out.block(b * steps, h * d, steps, d).noalias() = probs->back() * vb;
    }
  }
  if (weights_out) *weights_out = *probs;
  return t.record(std::move(out), {q, k, v},
                  [q, k, v, probs, steps, d, heads, inv_scale](Tape<S>& tp, std::uint32_t self) {
                    const auto& gy = tp.grad(self);
                    const auto& Qv = tp.value(q);
                    const auto& Kv = tp.value(k);
                    const auto& Vv = tp.value(v);
                    const bool need_q = tp.requires_grad(q);
                    const bool need_k = tp.requires_grad(k);
                    const bool need_v = tp.requires_grad(v);
                    const Index batch_n = Qv.rows() / steps;
                    Matrix<S> gq, gk, gv;
                    for (Index b = 0; b < batch_n; ++b) {
                      for (Index h = 0; h < heads; ++h) {
                        const auto& p = (*probs)[static_cast<std::size_t>(b * heads + h)];
                        attention_block_backward<S>(
                            p, Qv.block(b * steps, h * d, steps, d), Kv.block(b * steps, h * d, steps, d),
                            Vv.block(b * steps, h * d, steps, d), gy.block(b * steps, h * d, steps, d),
                            inv_scale, need_q ? &gq : nullptr, need_k ? &gk : nullptr,
                            need_v ? &gv : nullptr);
                        if (need_q) tp.grad(q).block(b * steps, h * d, steps, d) += gq;
                        if (need_k) tp.grad(k).block(b * steps, h * d, steps, d) += gk;
                        if (need_v) tp.grad(v).block(b * steps, h * d, steps, d) += gv;
                      }
                    }
                  });
}

#define RSMC_INSTANTIATE_OPS(S)                                                               \
  template Var matmul<S>(Tape<S>&, Var, Var);                                                \
  template Var linear<S>(Tape<S>&, Var, Var);                                                \
  template Var linear<S>(Tape<S>&, Var, Var, Var);                                           \
  template Var add<S>(Tape<S>&, Var, Var);                                                   \
  template Var sub<S>(Tape<S>&, Var, Var);                                                   \
  template Var add_row<S>(Tape<S>&, Var, Var);                                               \
  template Var scale<S>(Tape<S>&, Var, S);                                                   \
  template Var blend<S>(Tape<S>&, Var, Var, Var);                                            \
  template Var sigmoid<S>(Tape<S>&, Var);                                                    \
  template Var tanh<S>(Tape<S>&, Var);                                                       \
  template Var relu<S>(Tape<S>&, Var);                                                       \
  template Var layer_norm<S>(Tape<S>&, Var, Var, Var, S);                                    \
  template Var batch_norm<S>(Tape<S>&, Var, Var, Var, Matrix<S>&, Matrix<S>&, S, S, bool);   \
  template Var softmax_rows<S>(Tape<S>&, Var);                                               \
  template Var log_softmax_rows<S>(Tape<S>&, Var);                                           \
  template Var dropout<S>(Tape<S>&, Var, double, bool, RngStream&);                          \
  template Var reshape<S>(Tape<S>&, Var, Index, Index);                                      \
  template Var concat_cols<S>(Tape<S>&, Var, Var);                                           \
  template Var gather_rows<S>(Tape<S>&, Var, std::vector<Index>);                            \
  template Var segment_mean<S>(Tape<S>&, Var, Index);                                        \
  template Var repeat_rows<S>(Tape<S>&, Var, Index);                                         \
  template Var weighted_segment_sum<S>(Tape<S>&, Var, Var);                                  \
  template Var sum<S>(Tape<S>&, Var);                                                        \
  template Var mean<S>(Tape<S>&, Var);                                                       \
  template Var nll_loss<S>(Tape<S>&, Var, std::span<const int>);                             \
  template Var grouped_matmul<S>(Tape<S>&, Var, std::span<const int>, const std::vector<Var>&); \
  template Matrix<S> masked_softmax<S>(const Matrix<S>&, const Matrix<S>&);                  \
  template AttentionResult<S> masked_softmax_attention<S>(Tape<S>&, Var, Var, Var,           \
                                                          const Matrix<S>&, double);         \
  template Var multihead_attention<S>(Tape<S>&, Var, Var, Var, const Matrix<S>&, Index, Index, \
                                      std::vector<Matrix<S>>*);

RSMC_INSTANTIATE_OPS(float)
RSMC_INSTANTIATE_OPS(double)

#undef RSMC_INSTANTIATE_OPS

}  // namespace rsmc::ops
