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

#include "rsmc/rsmc.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "rsmc/config.hpp"
#include "rsmc/dataio.hpp"
#include "rsmc/error.hpp"
#include "rsmc/exports.hpp"
#include "rsmc/gradcheck.hpp"
#include "rsmc/loso.hpp"
#include "rsmc/mstt.hpp"
#include "rsmc/topology.hpp"

struct rsmc_config {
  rsmc::RunConfig value;
};

struct rsmc_dataset {
  rsmc::Dataset value;
};

namespace {

thread_local std::string g_last_error;
thread_local int g_last_fold = -1;

rsmc_status fail(rsmc_status status, const std::string& message, int fold = -1) {
  g_last_error = message;
  g_last_fold = fold;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
rsmc_status guarded(Fn&& fn) {
  g_last_error.clear();
  g_last_fold = -1;
  try {
    fn();
    return RSMC_OK;
  } catch (const rsmc::NumericError& e) {
    return fail(RSMC_ERR_NUMERIC, e.what(), e.fold());
  } catch (const rsmc::ParseError& e) {
    return fail(RSMC_ERR_FORMAT, e.what());
  } catch (const rsmc::IoError& e) {
    return fail(RSMC_ERR_IO, e.what());
  } catch (const rsmc::ConfigError& e) {
    return fail(RSMC_ERR_USAGE, e.what());
  } catch (const rsmc::PreconditionError& e) {
    return fail(RSMC_ERR_USAGE, e.what());
  } catch (const rsmc::LookupError& e) {
    return fail(RSMC_ERR_USAGE, e.what());
  } catch (const rsmc::DimensionError& e) {
    return fail(RSMC_ERR_USAGE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(RSMC_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(RSMC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RSMC_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw rsmc::PreconditionError(std::string(what) + " must not be NULL");
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

struct ResolvedData {
  rsmc::Dataset data;
  std::string path;
};

// dataset=<path> wins; otherwise synth=true generates and stores a copy in
// the run directory so later exports can find it.
ResolvedData resolve_dataset(const rsmc::RunConfig& config, const std::filesystem::path& run_dir) {
  ResolvedData r;
  if (!config.dataset.empty()) {
    if (!std::filesystem::exists(config.dataset)) {
      throw rsmc::ConfigError("dataset '" + config.dataset + "' does not exist");
    }
    r.data = rsmc::load_dataset(config.dataset);
    r.path = std::filesystem::absolute(config.dataset).string();
  } else if (config.synth) {
    r.data = rsmc::synthesize(config.synth_spec);
    std::filesystem::create_directories(run_dir);
    const auto path = run_dir / "dataset.rsmc";
    rsmc::save_dataset(r.data, path);
    r.path = std::filesystem::absolute(path).string();
  } else {
    throw rsmc::ConfigError("no dataset: set dataset=<path> or synth=true");
  }
  return r;
}

std::filesystem::path run_dir_of(const rsmc_config* config, const char* run_dir) {
  return run_dir && *run_dir ? std::filesystem::path(run_dir) : std::filesystem::path(config->value.output);
}

void check_config(const rsmc::RunConfig& c) {
  if (auto v = c.validate(); !v.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& s : v) msg += " " + s + ";";
    msg.pop_back();
    throw rsmc::ConfigError(msg);
  }
}

class ProgressBuf : public std::stringbuf {
 public:
  ProgressBuf(rsmc_progress_fn fn, void* user) : fn_(fn), user_(user) {}

 protected:
  int sync() override {
    std::string text = str();
    std::size_t pos;
    while ((pos = text.find('\n')) != std::string::npos) {
      if (fn_) fn_(text.substr(0, pos).c_str(), user_);
      text.erase(0, pos + 1);
    }
    str(text);
    return 0;
  }

 private:
  rsmc_progress_fn fn_;
  void* user_;
};

}  // namespace

extern "C" {

const char* rsmc_version(void) { return RSMC_VERSION_STRING; }
const char* rsmc_last_error(void) { return g_last_error.c_str(); }
int rsmc_last_error_fold(void) { return g_last_fold; }

rsmc_status rsmc_config_create(rsmc_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new rsmc_config();
  });
}

void rsmc_config_destroy(rsmc_config* config) { delete config; }

rsmc_status rsmc_config_load_file(rsmc_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->value.load_file(path);
  });
}

rsmc_status rsmc_config_apply_env(rsmc_config* config) {
  return guarded([&] {
    require(config, "config");
    config->value.apply_environment();
  });
}

rsmc_status rsmc_config_set(rsmc_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->value.set(key, value);
  });
}

rsmc_status rsmc_config_get(const rsmc_config* config, const char* key, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    copy_out(config->value.get(key), buf, cap, needed);
  });
}

rsmc_status rsmc_config_echo(const rsmc_config* config, uint32_t time, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(config, "config");
    copy_out(config->value.echo(time), buf, cap, needed);
  });
}

rsmc_status rsmc_config_validate(const rsmc_config* config) {
  return guarded([&] {
    require(config, "config");
    check_config(config->value);
  });
}

void rsmc_synth_spec_default(rsmc_synth_spec* spec) {
  if (spec == nullptr) return;
  const rsmc::SynthSpec d;
  *spec = {d.subjects, d.classes, d.per_subject, d.window, d.snr, d.shift, d.seed};
}

rsmc_status rsmc_dataset_synthesize(const rsmc_synth_spec* spec, rsmc_dataset** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    rsmc::SynthSpec s;
    s.subjects = spec->subjects;
    s.classes = spec->classes;
    s.per_subject = spec->per_subject;
    s.window = spec->window;
    s.snr = spec->snr;
    s.shift = spec->shift;
    s.seed = spec->seed;
    auto d = std::make_unique<rsmc_dataset>();
    d->value = rsmc::synthesize(s);
    *out = d.release();
  });
}

rsmc_status rsmc_dataset_load(const char* path, rsmc_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto d = std::make_unique<rsmc_dataset>();
    d->value = rsmc::load_dataset(path);
    *out = d.release();
  });
}

rsmc_status rsmc_dataset_save(const rsmc_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(path, "path");
    rsmc::save_dataset(dataset->value, path);
  });
}

rsmc_status rsmc_dataset_shape(const rsmc_dataset* dataset, rsmc_shape* out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const auto& d = dataset->value;
    *out = {d.samples.batch, d.samples.time, d.samples.features, d.classes, d.subject_count};
  });
}

void rsmc_dataset_destroy(rsmc_dataset* dataset) { delete dataset; }

rsmc_status rsmc_loso_run(const rsmc_config* config, const char* run_dir, rsmc_progress_fn progress, void* user,
                          rsmc_loso_summary* out) {
  return guarded([&] {
    require(config, "config");
    check_config(config->value);
    const auto dir = run_dir_of(config, run_dir);
    const ResolvedData resolved = resolve_dataset(config->value, dir);
    rsmc::write_run_header(config->value, resolved.data, dir, resolved.path);
    ProgressBuf buf(progress, user);
    std::ostream stream(&buf);
    const rsmc::LosoReport report = rsmc::loso_run(resolved.data, config->value, dir, &stream);
    if (out) {
      auto ms = [](const rsmc::MeanStd& m) { return rsmc_mean_std{m.mean, m.std}; };
      *out = {report.folds.size(), ms(report.accuracy), ms(report.f1), ms(report.sensitivity),
              ms(report.specificity)};
    }
  });
}

rsmc_status rsmc_train_fold(const rsmc_config* config, int held_out_subject, const char* run_dir,
                            rsmc_fold_summary* out) {
  return guarded([&] {
    require(config, "config");
    check_config(config->value);
    const auto dir = run_dir_of(config, run_dir);
    const ResolvedData resolved = resolve_dataset(config->value, dir);
    const std::set<int> present(resolved.data.subjects.begin(), resolved.data.subjects.end());
    if (present.empty()) throw rsmc::PreconditionError("dataset is empty");
    const int held_out = held_out_subject < 0 ? *present.rbegin() : held_out_subject;
    const auto it = present.find(held_out);
    if (it == present.end()) {
      throw rsmc::PreconditionError("subject " + std::to_string(held_out) + " is not in the dataset");
    }
    rsmc::write_run_header(config->value, resolved.data, dir, resolved.path);
    const int fold = static_cast<int>(std::distance(present.begin(), it));
    const rsmc::FoldReport r = rsmc::run_fold(resolved.data, held_out, fold, config->value, dir);
    if (out) {
      *out = {r.held_out_subject, r.metrics.accuracy, r.metrics.f1, r.metrics.sensitivity, r.metrics.specificity,
              r.epochs_run};
    }
  });
}

rsmc_status rsmc_gradcheck(size_t probes, uint64_t seed, int force_dropout, double* worst_rel_error) {
  return guarded([&] {
    const rsmc::GradCheckReport report = rsmc::check_model_gradients(probes, seed, force_dropout != 0);
    if (worst_rel_error) *worst_rel_error = report.max_rel_error;
  });
}

rsmc_status rsmc_topology_dump(const char* path) {
  return guarded([&] {
    require(path, "path");
    if (std::string(path) == "-") {
      rsmc::write_partition_csv(std::cout);
      std::cout.flush();
      return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw rsmc::IoError(std::string("cannot write '") + path + "'");
    rsmc::write_partition_csv(out);
  });
}

rsmc_status rsmc_dump_masks(uint32_t time, int32_t window, int32_t period, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    if (period < 0) throw rsmc::PreconditionError("sparse period must be >= 0");
    const rsmc::Index t = time;
    const rsmc::Index p = period == 0 ? rsmc::default_sparse_period(t) : period;
    const auto local = rsmc::build_local_mask<double>(t, window);
    const auto sparse = rsmc::build_sparse_mask<double>(t, p);
    if (std::string(out_dir) == "-") {
      std::cout << "# local w=" << window << '\n';
      rsmc::write_mask_csv(std::cout, local);
      std::cout << "# sparse p=" << p << '\n';
      rsmc::write_mask_csv(std::cout, sparse);
      std::cout.flush();
      return;
    }
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::ofstream lo(dir / "local_mask.csv", std::ios::trunc);
    std::ofstream sp(dir / "sparse_mask.csv", std::ios::trunc);
    if (!lo || !sp) throw rsmc::IoError("cannot write masks under '" + dir.string() + "'");
    rsmc::write_mask_csv(lo, local);
    rsmc::write_mask_csv(sp, sparse);
  });
}

rsmc_status rsmc_export_masks(const char* run_dir) {
  return guarded([&] {
    require(run_dir, "run_dir");
    rsmc::export_masks(run_dir);
  });
}

rsmc_status rsmc_export_confusion(const char* run_dir) {
  return guarded([&] {
    require(run_dir, "run_dir");
    rsmc::export_confusion(run_dir);
  });
}

rsmc_status rsmc_export_spatial_attention(const char* run_dir, int subject) {
  return guarded([&] {
    require(run_dir, "run_dir");
    const std::filesystem::path dir(run_dir);
    std::ifstream in(dir / "run_meta.json");
    if (!in) throw rsmc::IoError("missing run artifact '" + (dir / "run_meta.json").string() + "'");
    std::string dataset_path;
    try {
      dataset_path = nlohmann::json::parse(in).at("dataset").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw rsmc::ParseError(std::string("run_meta.json: ") + e.what(), 0);
    }
    if (!std::filesystem::exists(dataset_path)) throw rsmc::IoError("dataset '" + dataset_path + "' not found");
    rsmc::export_spatial_attention(dir, subject, rsmc::load_dataset(dataset_path));
  });
}

}  // extern "C"
