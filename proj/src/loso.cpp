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

#include "rsmc/loso.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rsmc/checkpoint.hpp"

namespace rsmc {
namespace {

using ojson = nlohmann::ordered_json;

// Settings that do not change results stay out of the hash.
std::string hashed_echo(const RunConfig& config, Index time) {
  std::istringstream in(config.echo(time));
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.starts_with("output=") || line.starts_with("fold_workers=")) continue;
    out += line + '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

ojson metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"f1", m.f1}, {"sensitivity", m.sensitivity}, {"specificity", m.specificity}};
}

ojson model_json(const ModelConfig& m) {
  return {{"features", m.features},
          {"time", m.time},
          {"classes", m.classes},
          {"hidden", m.hidden},
          {"heads", m.heads},
          {"local_window", m.local_window},
          {"sparse_period", m.effective_sparse_period()},
          {"embed_dim", m.embed},
          {"classifier_hidden", m.classifier_hidden},
          {"dropout", m.dropout},
          {"bn_momentum", m.bn_momentum},
          {"untied_branches", m.untied_branches},
          {"no_align", m.no_align},
          {"no_rgrm", m.no_rgrm},
          {"no_mstt", m.no_mstt},
          {"no_codg", m.no_codg},
          {"seed", m.seed}};
}

ModelConfig model_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.features = j.at("features").get<Index>();
  m.time = j.at("time").get<Index>();
  m.classes = j.at("classes").get<Index>();
  m.hidden = j.at("hidden").get<Index>();
  m.heads = j.at("heads").get<Index>();
  m.local_window = j.at("local_window").get<Index>();
  m.sparse_period = j.at("sparse_period").get<Index>();
  m.embed = j.at("embed_dim").get<Index>();
  m.classifier_hidden = j.at("classifier_hidden").get<Index>();
  m.dropout = j.at("dropout").get<double>();
  m.bn_momentum = j.at("bn_momentum").get<double>();
  m.untied_branches = j.at("untied_branches").get<bool>();
  m.no_align = j.at("no_align").get<bool>();
  m.no_rgrm = j.at("no_rgrm").get<bool>();
  m.no_mstt = j.at("no_mstt").get<bool>();
  m.no_codg = j.at("no_codg").get<bool>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

void write_fold_artifacts(const std::filesystem::path& dir, const FoldReport& report, const TrainResult& trained,
                          const MinMaxStats& stats) {
  ojson r = {{"fold", report.fold},
             {"held_out_subject", report.held_out_subject},
             {"test_samples", report.test_samples},
             {"metrics", metrics_json(report.metrics)},
             {"confusion", report.metrics.confusion},
             {"epochs_run", report.epochs_run},
             {"best_epoch", report.best_epoch},
             {"best_val_loss", report.best_val_loss},
             {"steps", report.steps},
             {"audit", {{"batches_checked", report.batches_checked}, {"held_out_hits", report.audit_violations}}},
             {"contrast_empty_batches", report.contrast_empty_batches},
             {"config_hash", report.config_hash}};
  write_text(dir / "report.json", r.dump(2) + "\n");

  std::ostringstream csv;
  const auto& c = report.metrics.confusion;
  csv << "true\\pred";
  for (std::size_t j = 0; j < c.size(); ++j) csv << ',' << j;
  csv << '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    csv << i;
    for (auto v : c[i]) csv << ',' << v;
    csv << '\n';
  }
  write_text(dir / "confusion.csv", csv.str());

  ojson mc = {{"model", model_json(trained.model)},
              {"held_out_subject", report.held_out_subject},
              {"normalization", {{"min", stats.min}, {"max", stats.max}}}};
  write_text(dir / "model_config.json", mc.dump(2) + "\n");
  save_checkpoint(trained.params, dir / "model", trained.steps);
}

}  // namespace

std::string fold_dir_name(int subject) { return "fold_" + std::to_string(subject); }

FoldReport run_fold(const Dataset& data, int held_out, int fold_index, const RunConfig& config,
                    const std::filesystem::path& run_dir) {
  std::vector<std::size_t> source_idx, target_idx;
  for (std::size_t i = 0; i < data.size(); ++i) (data.subjects[i] == held_out ? target_idx : source_idx).push_back(i);
  if (target_idx.empty()) throw PreconditionError("subject " + std::to_string(held_out) + " has no samples");

  // Normalisation statistics from the source subjects only.
  const MinMaxStats stats = fit_minmax(subset(data, source_idx));
  Dataset source = subset(data, source_idx);
  Dataset target = subset(data, target_idx);
  apply_minmax(source, stats);
  apply_minmax(target, stats);

  RngStream split_rng(config.seed, "fold/" + std::to_string(fold_index) + "/validation");
  const ValidationSplit split = stratified_split(source, config.val_fraction, split_rng);
  const Dataset train = subset(source, split.train);
  const Dataset val = subset(source, split.val);

  std::filesystem::path dir;
  std::ofstream log;
  TrainOptions options;
  options.fold = fold_index;
  options.held_out_subject = held_out;
  if (!run_dir.empty()) {
    dir = run_dir / fold_dir_name(held_out);
    std::filesystem::create_directories(dir);
    log.open(dir / "train_log.jsonl", std::ios::trunc);
    if (!log) throw IoError("cannot write '" + (dir / "train_log.jsonl").string() + "'");
    options.log = &log;
  }
  // The validation split must not see the held-out subject either.
  for (auto s : val.subjects) {
    if (s == held_out) throw Error("held-out subject leaked into validation data");
  }

  TrainResult trained = train_fold(train, val, config, options);

  std::vector<int> labels(target.labels.begin(), target.labels.end());
  const auto preds = predict(trained.params, trained.model, target);

  FoldReport report;
  report.fold = fold_index;
  report.held_out_subject = held_out;
  report.metrics = compute_metrics(preds, labels, static_cast<int>(data.classes));
  report.test_samples = target.size();
  report.epochs_run = static_cast<int>(trained.history.size());
  report.best_epoch = trained.best_epoch;
  report.best_val_loss = trained.best_val_loss;
  report.steps = trained.steps;
  report.batches_checked = trained.batches_checked;
  report.audit_violations = trained.audit_violations;
  report.contrast_empty_batches = trained.contrast_empty_batches;
  report.config_hash = config_hash(hashed_echo(config, data.window()));
  if (report.audit_violations != 0) {
    throw Error("held-out subject " + std::to_string(held_out) + " appeared in " +
                std::to_string(report.audit_violations) + " training samples");
  }
  if (!dir.empty()) write_fold_artifacts(dir, report, trained, stats);
  return report;
}

LosoReport loso_run(const Dataset& data, const RunConfig& config, const std::filesystem::path& run_dir,
                    std::ostream* progress) {
  if (auto v = config.validate(); !v.empty()) throw ConfigError("invalid configuration: " + v.front());
  const std::set<int> present(data.subjects.begin(), data.subjects.end());
  const std::vector<int> subjects(present.begin(), present.end());
  if (subjects.size() < 3) {
    throw PreconditionError("LOSO needs at least 3 subjects, got " + std::to_string(subjects.size()));
  }
  if (!run_dir.empty()) std::filesystem::create_directories(run_dir);

  LosoReport out;
  out.folds.resize(subjects.size());
  out.config_hash = config_hash(hashed_echo(config, data.window()));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= subjects.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        out.folds[k] = run_fold(data, subjects[k], static_cast<int>(k), config, run_dir);
        std::lock_guard lock(mu);
        if (progress) {
          *progress << "fold " << k << " (subject " << subjects[k] << "): accuracy " << std::fixed
                    << std::setprecision(2) << out.folds[k].metrics.accuracy << "% after "
                    << out.folds[k].epochs_run << " epochs\n";
          progress->flush();
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.fold_workers), subjects.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> acc, f1, sens, spec;
  for (const auto& f : out.folds) {
    acc.push_back(f.metrics.accuracy);
    f1.push_back(f.metrics.f1);
    sens.push_back(f.metrics.sensitivity);
    spec.push_back(f.metrics.specificity);
  }
  out.accuracy = mean_std(acc);
  out.f1 = mean_std(f1);
  out.sensitivity = mean_std(sens);
  out.specificity = mean_std(spec);

  if (!run_dir.empty()) {
    auto ms = [](const MeanStd& m) { return ojson{{"mean", m.mean}, {"std", m.std}}; };
    ojson folds = ojson::array();
    for (const auto& f : out.folds) {
      folds.push_back({{"fold", f.fold},
                       {"held_out_subject", f.held_out_subject},
                       {"metrics", metrics_json(f.metrics)},
                       {"epochs_run", f.epochs_run}});
    }
    const LossWeights w = config.effective_loss();
    ojson agg = {{"folds", out.folds.size()},
                 {"std_kind", "population"},
                 {"accuracy", ms(out.accuracy)},
                 {"f1", ms(out.f1)},
                 {"sensitivity", ms(out.sensitivity)},
                 {"specificity", ms(out.specificity)},
                 {"ablations",
                  {{"no_align", config.model.no_align},
                   {"no_rgrm", config.model.no_rgrm},
                   {"no_mstt", config.model.no_mstt},
                   {"no_codg", config.model.no_codg},
                   {"no_mmd", config.no_mmd || config.model.no_codg},
                   {"no_contrast", config.no_contrast || config.model.no_codg},
                   {"no_orth", config.no_orth || config.model.no_codg}}},
                 {"loss_weights", {{"contrast", w.contrast}, {"orth", w.orth}, {"mmd", w.mmd}, {"tau", w.tau}}},
                 {"local_window", config.model.local_window},
                 {"sparse_period", config.model_config(data.samples.features, data.window(), data.classes)
                                       .effective_sparse_period()},
                 {"heads", config.model.heads},
                 {"d_k", config.model.hidden / config.model.heads},
                 {"config_hash", out.config_hash},
                 {"per_fold", folds}};
    write_text(run_dir / "aggregate.json", agg.dump(2) + "\n");
  }
  return out;
}

void write_run_header(const RunConfig& config, const Dataset& data, const std::filesystem::path& run_dir,
                      const std::string& dataset_path) {
  std::filesystem::create_directories(run_dir);
  write_text(run_dir / "config.txt", config.echo(data.window()));
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  ojson meta = {{"version", RSMC_VERSION_STRING},
                {"created", ts.str()},
                {"config_hash", config_hash(hashed_echo(config, data.window()))},
                {"dataset", dataset_path},
                {"dataset_provenance", data.provenance},
                {"shape",
                 {{"B", data.size()},
                  {"T", data.window()},
                  {"F", data.samples.features},
                  {"C", data.classes},
                  {"S", data.subject_count}}}};
  write_text(run_dir / "run_meta.json", meta.dump(2) + "\n");
}

FoldArtifacts load_fold_artifacts(const std::filesystem::path& run_dir, int subject) {
  const auto dir = run_dir / fold_dir_name(subject);
  const auto cfg_path = dir / "model_config.json";
  std::ifstream in(cfg_path);
  if (!in) throw IoError("missing fold artifact '" + cfg_path.string() + "'");
  FoldArtifacts a;
  try {
    const auto doc = nlohmann::json::parse(in);
    a.model = model_from_json(doc.at("model"));
    a.held_out_subject = doc.at("held_out_subject").get<int>();
    a.stats.min = doc.at("normalization").at("min").get<std::vector<float>>();
    a.stats.max = doc.at("normalization").at("max").get<std::vector<float>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("fold artifact '" + cfg_path.string() + "': " + e.what(), 0);
  }
  if (!std::filesystem::exists(dir / "model.json")) {
    throw IoError("missing fold artifact '" + (dir / "model.json").string() + "'");
  }
  a.params = load_checkpoint<float>(dir / "model");
  return a;
}

}  // namespace rsmc
