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

#include "lr_oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace rsmc::testing {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Samples x F matrix of time-averaged windows.
Mat time_average(const Dataset& data) {
  const auto& x = data.samples;
  Mat out = Mat::Zero(x.batch, x.features);
  for (std::size_t b = 0; b < x.batch; ++b) {
    for (std::size_t t = 0; t < x.time; ++t) {
      for (std::size_t f = 0; f < x.features; ++f) out(b, f) += x.at(b, t, f);
    }
  }
  return out / static_cast<double>(x.time);
}

struct Model {
  Mat w;  // C x F
  Vec b;  // C
};

// Objective gradient at (w, b); returns the objective value.
double gradient(const Mat& x, const std::vector<int>& y, double c, const Model& m, Model& g) {
  Mat logits = x * m.w.transpose();
  logits.rowwise() += m.b.transpose();
  double loss = 0.5 * m.w.squaredNorm();
  Mat resid(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Vec e = (logits.row(i).array() - mx).exp().transpose();
    const double z = e.sum();
    loss += c * (std::log(z) + mx - logits(i, y[static_cast<std::size_t>(i)]));
    resid.row(i) = (e / z).transpose();
    resid(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  }
  g.w = m.w + c * resid.transpose() * x;
  g.b = c * resid.colwise().sum().transpose();
  return loss;
}

Model fit(const Mat& x, const std::vector<int>& y, int classes, double c) {
  // Damped Newton on the convex objective. The unpenalised intercepts get a
  // tiny ridge: softmax is invariant to a common shift, so their Hessian
  // block is singular.
  const Eigen::Index n = x.rows(), f = x.cols(), k = classes, width = f + 1;
  Mat xa(n, width);
  xa << x, Vec::Ones(n);
  Model m{Mat::Zero(k, f), Vec::Zero(k)};
  Model g = m;
  double loss = gradient(x, y, c, m, g);
  for (int it = 0; it < 50; ++it) {
    Mat logits = x * m.w.transpose();
    logits.rowwise() += m.b.transpose();
    Mat p(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec e = (logits.row(i).array() - logits.row(i).maxCoeff()).exp().transpose();
      p.row(i) = (e / e.sum()).transpose();
    }
    Mat h = Mat::Zero(k * width, k * width);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = a; b < k; ++b) {
        Vec w = -p.col(a).cwiseProduct(p.col(b));
        if (a == b) w += p.col(a);
        const Mat block = c * xa.transpose() * w.asDiagonal() * xa;
        h.block(a * width, b * width, width, width) = block;
        h.block(b * width, a * width, width, width) = block.transpose();
      }
    }
    Vec grad(k * width);
    for (Eigen::Index a = 0; a < k; ++a) {
      h.block(a * width, a * width, f, f).diagonal().array() += 1.0;
      h(a * width + f, a * width + f) += 1e-8;
      grad.segment(a * width, f) = g.w.row(a).transpose();
      grad(a * width + f) = g.b(a);
    }
    const Vec dir = h.ldlt().solve(-grad);
    double step = 1.0;
    Model trial = m, trial_g = g;
    double trial_loss = loss;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      for (Eigen::Index a = 0; a < k; ++a) {
        trial.w.row(a) = m.w.row(a) + step * dir.segment(a * width, f).transpose();
        trial.b(a) = m.b(a) + step * dir(a * width + f);
      }
      trial_loss = gradient(x, y, c, trial, trial_g);
      if (trial_loss <= loss + 1e-4 * step * grad.dot(dir)) break;
    }
    const double decrease = loss - trial_loss;
    m = trial;
    g = trial_g;
    loss = trial_loss;
    if (decrease < 1e-10 * std::max(1.0, std::abs(loss))) break;
  }
  return m;
}

}  // namespace

LrOracleResult lr_oracle_loso(const Dataset& data, double inverse_reg) {
  const Mat xm = time_average(data);
  const auto classes = static_cast<int>(data.classes);
  std::vector<int> present(data.subjects.begin(), data.subjects.end());
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());

  LrOracleResult result;
  for (int held : present) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) {
      (data.subjects[i] == held ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    const Mat xtr = xm(train, Eigen::all);
    const Vec mu = xtr.colwise().mean().transpose();
    Vec sd = ((xtr.rowwise() - mu.transpose()).array().square().colwise().mean()).sqrt().transpose();
    sd.array() += 1e-8;
    auto standardise = [&](const Mat& a) -> Mat {
      return ((a.rowwise() - mu.transpose()).array().rowwise() / sd.transpose().array()).matrix();
    };
    std::vector<int> ytr;
    for (auto i : train) ytr.push_back(data.labels[static_cast<std::size_t>(i)]);
    const Model m = fit(standardise(xtr), ytr, classes, inverse_reg);

    Mat logits = standardise(xm(test, Eigen::all)) * m.w.transpose();
    logits.rowwise() += m.b.transpose();
    std::size_t hits = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index arg = 0;
      logits.row(r).maxCoeff(&arg);
      hits += arg == data.labels[static_cast<std::size_t>(test[static_cast<std::size_t>(r)])];
    }
    result.fold_accuracy.push_back(100.0 * static_cast<double>(hits) / static_cast<double>(test.size()));
  }
  result.mean = std::accumulate(result.fold_accuracy.begin(), result.fold_accuracy.end(), 0.0) /
                static_cast<double>(result.fold_accuracy.size());
  return result;
}

}  // namespace rsmc::testing
