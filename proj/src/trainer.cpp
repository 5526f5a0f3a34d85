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

#include "rsmc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "rsmc/optimizer.hpp"

namespace rsmc {
namespace {

constexpr std::size_t kEvalChunk = 256;

template <typename T>
void shuffle(std::vector<T>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<int> as_int(std::span<const std::uint8_t> bytes, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(bytes[i]);
  return out;
}

std::vector<int> distinct_subjects(const Dataset& d) {
  std::set<int> s(d.subjects.begin(), d.subjects.end());
  return {s.begin(), s.end()};
}

// Runs `fn(tape, forward, indices)` over eval-mode chunks.
template <typename Fn>
void for_each_chunk(ParamStore<float>& params, const ModelConfig& model, const Dataset& data, Fn&& fn) {
  RngStream unused(0, "eval");
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min<std::size_t>(data.size(), start + kEvalChunk); ++i) idx.push_back(i);
    Tape<float> tape;
    Var x = tape.constant(gather_batch(data, idx));
    const auto subjects = as_int(data.subjects, idx);
    ForwardOutput out = model_forward(tape, params, model, x, subjects, Mode::kEval, unused);
    fn(tape, out, idx);
  }
}

}  // namespace

ValidationSplit stratified_split(const Dataset& data, double fraction, RngStream& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw PreconditionError("validation fraction must be in [0, 1)");
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) groups[{data.subjects[i], data.labels[i]}].push_back(i);
  ValidationSplit split;
  for (auto& [key, members] : groups) {
    RngStream g = rng.split("group/" + std::to_string(key.first) + "/" + std::to_string(key.second));
    shuffle(members, g);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    take = std::min(take, members.size() - 1);
    split.val.insert(split.val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

BalancedSampler::BalancedSampler(const Dataset& data, RngStream rng) : rng_(rng), subjects_(distinct_subjects(data)) {
  pools_.resize(subjects_.size());
  queues_.resize(subjects_.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pos = std::lower_bound(subjects_.begin(), subjects_.end(), static_cast<int>(data.subjects[i]));
    pools_[static_cast<std::size_t>(pos - subjects_.begin())].push_back(i);
  }
}

std::size_t BalancedSampler::max_subject_count() const {
  std::size_t m = 0;
  for (const auto& p : pools_) m = std::max(m, p.size());
  return m;
}

void BalancedSampler::refill(std::size_t s) {
  queues_[s] = pools_[s];
  shuffle(queues_[s], rng_);
}

std::vector<std::size_t> BalancedSampler::next(std::size_t batch) {
  std::vector<std::size_t> out;
  if (subjects_.empty()) return out;
  out.reserve(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    const std::size_t s = (rotation_ + j) % subjects_.size();
    if (queues_[s].empty()) refill(s);
    out.push_back(queues_[s].back());
    queues_[s].pop_back();
  }
  rotation_ = (rotation_ + batch) % subjects_.size();
  return out;
}

Matrix<float> gather_batch(const Dataset& data, std::span<const std::size_t> indices) {
  const Index t = data.samples.time;
  const Index f = data.samples.features;
  Matrix<float> x(static_cast<Index>(indices.size()) * t, f);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] >= data.size()) throw LookupError("gather_batch: sample index out of range");
    std::copy_n(data.samples.sample(indices[b]), t * f, x.data() + static_cast<Index>(b) * t * f);
  }
  return x;
}

double evaluate_loss(ParamStore<float>& params, const ModelConfig& model, const Dataset& data) {
  if (data.size() == 0) throw PreconditionError("evaluate_loss: empty dataset");
  double total = 0.0;
  for_each_chunk(params, model, data, [&](Tape<float>& tape, const ForwardOutput& out, const std::vector<std::size_t>& idx) {
    const auto labels = as_int(data.labels, idx);
    total += static_cast<double>(tape.value(ops::nll_loss(tape, out.head.log_probs, labels))(0, 0)) *
             static_cast<double>(idx.size());
  });
  return total / static_cast<double>(data.size());
}

std::vector<int> predict(ParamStore<float>& params, const ModelConfig& model, const Dataset& data,
                         Matrix<float>* spatial_attention) {
  std::vector<int> out(data.size());
  if (spatial_attention) spatial_attention->resize(static_cast<Index>(data.size()), model.features);
  for_each_chunk(params, model, data, [&](Tape<float>& tape, const ForwardOutput& fwd, const std::vector<std::size_t>& idx) {
    const auto& logp = tape.value(fwd.head.log_probs);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      Index arg = 0;
      logp.row(static_cast<Index>(b)).maxCoeff(&arg);
      out[idx[b]] = static_cast<int>(arg);
    }
    if (spatial_attention) {
      const auto& a = tape.value(fwd.spatial.attention);
      for (std::size_t b = 0; b < idx.size(); ++b) spatial_attention->row(static_cast<Index>(idx[b])) = a.row(static_cast<Index>(b));
    }
  });
  return out;
}

TrainResult train_fold(const Dataset& train, const Dataset& val, const RunConfig& config, const TrainOptions& options) {
  if (auto v = config.validate(); !v.empty()) throw ConfigError("invalid configuration: " + v.front());
  if (train.size() == 0) throw PreconditionError("train_fold: empty training set");
  const auto subjects = distinct_subjects(train);
  if (subjects.size() < 2) {
    throw PreconditionError("train_fold: need at least 2 training subjects, got " + std::to_string(subjects.size()));
  }
  const std::string fold_tag = "fold/" + std::to_string(options.fold);
  RngStream root(config.seed, fold_tag);

  TrainResult result;
  result.model = config.model_config(train.samples.features, train.samples.time, train.classes);
  result.params = init_model<float>(result.model, subjects);
  const LossWeights weights = config.effective_loss();
  Adam<float> adam(AdamOptions{.weight_decay = config.weight_decay});
  BalancedSampler sampler(train, root.split("sampler"));
  RngStream noise_rng = root.split("noise");
  RngStream dropout_rng = root.split("dropout");
  const auto batch = static_cast<std::size_t>(config.batch);
  const int iterations = static_cast<int>((sampler.max_subject_count() + batch - 1) / batch);

  ParamStore<float> best;
  int bad_epochs = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = schedule_lr(config.lr, epoch, config.lr_step, config.lr_factor);
    rec.iterations = iterations;
    for (int it = 0; it < iterations; ++it) {
      const auto idx = sampler.next(batch);
      const auto batch_subjects = as_int(train.subjects, idx);
      const auto labels = as_int(train.labels, idx);
      ++result.batches_checked;
      for (int s : batch_subjects) {
        if (s == options.held_out_subject) ++result.audit_violations;
      }
      Matrix<float> x = gather_batch(train, idx);
      inject_noise(x, config.noise, true, noise_rng);

      result.params.zero_grad();
      Tape<float> tape;
      ForwardOutput fwd = model_forward(tape, result.params, result.model, tape.constant(std::move(x)),
                                        batch_subjects, Mode::kTrain, dropout_rng);
      LossBundle loss = total_loss(tape, fwd.head, labels, batch_subjects, weights);
      if (!std::isfinite(loss.total)) {
        throw NumericError("non-finite loss at fold " + std::to_string(options.fold) + " epoch " +
                               std::to_string(epoch) + " iteration " + std::to_string(it),
                           options.fold);
      }
      if (weights.contrast > 0 && !config.model.no_codg && loss.contrast_anchors == 0) ++result.contrast_empty_batches;
      tape.backward(loss.total_var);
      try {
        adam.step(result.params, rec.lr);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at fold " + std::to_string(options.fold), options.fold);
      }
      ++result.steps;
      rec.loss += loss.total / iterations;
      rec.cls += loss.cls / iterations;
      rec.contrast += loss.contrast / iterations;
      rec.orth += loss.orth / iterations;
      rec.mmd += loss.mmd / iterations;
      if (options.log) {
        nlohmann::ordered_json line = {{"type", "iter"},      {"fold", options.fold}, {"epoch", epoch},
                                       {"iter", it},          {"step", result.steps}, {"lr", rec.lr},
                                       {"loss", loss.total},  {"cls", loss.cls},      {"contrast", loss.contrast},
                                       {"orth", loss.orth},   {"mmd", loss.mmd}};
        *options.log << line.dump() << '\n';
      }
    }

    bool improved = true;
    if (val.size() > 0) {
      rec.val_loss = evaluate_loss(result.params, result.model, val);
      if (!std::isfinite(rec.val_loss)) {
        throw NumericError("non-finite validation loss at fold " + std::to_string(options.fold) + " epoch " +
                               std::to_string(epoch),
                           options.fold);
      }
      improved = rec.val_loss < result.best_val_loss;
    }
    if (improved) {
      result.best_val_loss = val.size() > 0 ? rec.val_loss : result.best_val_loss;
      result.best_epoch = epoch;
      best = result.params;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    result.history.push_back(rec);
    if (options.log) {
      nlohmann::ordered_json line = {{"type", "epoch"},       {"fold", options.fold},     {"epoch", epoch},
                                     {"lr", rec.lr},          {"iterations", iterations}, {"loss", rec.loss},
                                     {"cls", rec.cls},        {"contrast", rec.contrast}, {"orth", rec.orth},
                                     {"mmd", rec.mmd},        {"val_loss", nullptr},      {"improved", improved}};
      if (val.size() > 0) line["val_loss"] = rec.val_loss;
      *options.log << line.dump() << '\n';
      options.log->flush();
    }
    if (bad_epochs > config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  result.params = std::move(best);
  return result;
}

}  // namespace rsmc
