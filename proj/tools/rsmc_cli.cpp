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

// rsmc command-line entry point. Exit codes: 0 success, 2 usage or
// configuration error (including missing inputs), 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsmc/rsmc.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr double kGradTolerance = 1e-4;

int exit_code(rsmc_status s) {
  switch (s) {
    case RSMC_OK:
      return 0;
    case RSMC_ERR_USAGE:
    case RSMC_ERR_IO:
    case RSMC_ERR_FORMAT:
      return kExitUsage;
    case RSMC_ERR_NUMERIC:
      return kExitNumeric;
    default:
      return 1;
  }
}

int report(rsmc_status s) {
  if (s != RSMC_OK) {
    std::cerr << "error: " << rsmc_last_error();
    if (s == RSMC_ERR_NUMERIC && rsmc_last_error_fold() >= 0) std::cerr << " (fold " << rsmc_last_error_fold() << ")";
    std::cerr << '\n';
  }
  return exit_code(s);
}

struct ConfigDeleter {
  void operator()(rsmc_config* c) const { rsmc_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<rsmc_config, ConfigDeleter>;

// Keys exposed as --flag-name value overrides.
const std::vector<std::string> kValueKeys = {
    "dataset",        "output",        "fold_workers",  "seed",          "lr",
    "weight_decay",   "lr_step",       "lr_factor",     "epochs",        "batch",
    "noise",          "patience",      "val_fraction",  "hidden",        "heads",
    "local_window",   "sparse_period", "embed_dim",     "classifier_hidden", "dropout",
    "bn_momentum",    "lambda_contrast", "lambda_orth", "lambda_mmd",    "tau",
    "synth_subjects", "synth_classes", "synth_per_subject", "synth_window", "synth_snr",
    "synth_shift",    "synth_seed"};
// Keys exposed as boolean --flag-name switches.
const std::vector<std::string> kFlagKeys = {"synth",  "untied_branches", "no_align", "no_rgrm", "no_mstt",
                                            "no_codg", "no_mmd",          "no_contrast", "no_orth"};

std::string flag_name(std::string key) {
  for (auto& c : key) c = c == '_' ? '-' : c;
  return "--" + key;
}

// Options shared by loso and train.
struct RunOptions {
  std::string config_file;
  std::string out;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key=value configuration file");
    cmd->add_option("--out", out, "run directory (overrides the output key)");
    for (const auto& key : kValueKeys) cmd->add_option(flag_name(key), values[key], "override '" + key + "'");
    for (const auto& key : kFlagKeys) cmd->add_flag(flag_name(key), flags[key], "set '" + key + "' to true");
    cmd->add_option("--set", sets, "extra key=value override (repeatable)");
  }

  // defaults < file < RSMC_SEED < flags
  rsmc_status build(CLI::App* cmd, ConfigPtr& config) const {
    rsmc_config* raw = nullptr;
    if (auto s = rsmc_config_create(&raw); s != RSMC_OK) return s;
    config.reset(raw);
    if (!config_file.empty()) {
      if (auto s = rsmc_config_load_file(raw, config_file.c_str()); s != RSMC_OK) return s;
    }
    if (auto s = rsmc_config_apply_env(raw); s != RSMC_OK) return s;
    for (const auto& key : kValueKeys) {
      if (cmd->count(flag_name(key)) > 0) {
        if (auto s = rsmc_config_set(raw, key.c_str(), values.at(key).c_str()); s != RSMC_OK) return s;
      }
    }
    for (const auto& key : kFlagKeys) {
      if (flags.at(key)) {
        if (auto s = rsmc_config_set(raw, key.c_str(), "true"); s != RSMC_OK) return s;
      }
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
        return RSMC_ERR_USAGE;
      }
      if (auto s = rsmc_config_set(raw, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()); s != RSMC_OK) return s;
    }
    if (!out.empty()) {
      if (auto s = rsmc_config_set(raw, "output", out.c_str()); s != RSMC_OK) return s;
    }
    return rsmc_config_validate(raw);
  }
};

void print_echo(const rsmc_config* config) {
  size_t needed = 0;
  rsmc_config_echo(config, 0, nullptr, 0, &needed);
  std::string text(needed, '\0');
  rsmc_config_echo(config, 0, text.data(), text.size(), nullptr);
  text.resize(needed > 0 ? needed - 1 : 0);
  std::cout << "# effective configuration\n" << text << std::flush;
}

void print_progress(const char* line, void*) { std::cout << line << '\n' << std::flush; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region-aware spatio-temporal EEG emotion recognition with subject generalisation"};
  app.set_version_flag("--version", std::string(rsmc_version()));
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic multi-subject dataset");
  rsmc_synth_spec spec;
  rsmc_synth_spec_default(&spec);
  std::string synth_out;
  synth->add_option("--subjects", spec.subjects, "number of subjects")->capture_default_str();
  synth->add_option("--classes", spec.classes, "number of classes (<= 30)")->capture_default_str();
  synth->add_option("--per-subject", spec.per_subject, "windows per subject")->capture_default_str();
  synth->add_option("--T", spec.window, "window length")->capture_default_str();
  synth->add_option("--snr", spec.snr, "signal-to-noise ratio")->capture_default_str();
  synth->add_option("--shift", spec.shift, "inter-subject mixing strength")->capture_default_str();
  synth->add_option("--seed", spec.seed, "generator seed (RSMC_SEED when omitted)")->capture_default_str();
  synth->add_option("--out", synth_out, "output container path")->required();

  // loso / train
  auto* loso = app.add_subcommand("loso", "leave-one-subject-out evaluation");
  RunOptions loso_opts;
  loso_opts.attach(loso);
  auto* train = app.add_subcommand("train", "train on all subjects but one and evaluate on it");
  RunOptions train_opts;
  train_opts.attach(train);
  int test_subject = -1;
  train->add_option("--test-subject", test_subject, "held-out subject id (default: highest)");

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the training objective");
  long long samples = 50;
  std::uint64_t grad_seed = 3;
  bool force_dropout = false;
  grad->add_option("--samples", samples, "number of probed coordinates")->capture_default_str();
  grad->add_option("--seed", grad_seed, "probe seed")->capture_default_str();
  grad->add_flag("--force-dropout", force_dropout, "enable dropout (rejected)");

  // export
  auto* exp = app.add_subcommand("export", "write CSV exports of a finished run");
  std::string kind, run_dir;
  int subject = -1;
  exp->add_option("kind", kind, "masks | spatial-attention | confusion")
      ->required()
      ->check(CLI::IsMember({"masks", "spatial-attention", "confusion"}));
  exp->add_option("--run", run_dir, "run directory")->required();
  exp->add_option("--subject", subject, "held-out subject (spatial-attention)");

  // dump-masks
  auto* masks = app.add_subcommand("dump-masks", "print local and sparse attention masks");
  std::uint32_t mask_t = 10;
  std::int32_t mask_w = 2, mask_p = 0;
  std::string mask_out = "-";
  masks->add_option("--T", mask_t, "sequence length")->required();
  masks->add_option("--w", mask_w, "local window")->capture_default_str();
  masks->add_option("--p", mask_p, "sparse period (0: max(1, T/4))")->capture_default_str();
  masks->add_option("--out", mask_out, "output directory or - for stdout")->capture_default_str();

  // topology dump
  auto* topo = app.add_subcommand("topology", "electrode topology");
  topo->require_subcommand(1);
  auto* topo_dump = topo->add_subcommand("dump", "print the electrode/region table as CSV");
  std::string topo_out = "-";
  topo_dump->add_option("--out", topo_out, "output path or - for stdout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*synth) {
    if (synth->count("--seed") == 0) {
      if (const char* env = std::getenv("RSMC_SEED"); env && *env) {
        char* end = nullptr;
        spec.seed = std::strtoull(env, &end, 10);
        if (*end != '\0' || env[0] == '-') {
          std::cerr << "error: RSMC_SEED must be a non-negative integer, got '" << env << "'\n";
          return kExitUsage;
        }
      }
    }
    rsmc_dataset* data = nullptr;
    if (auto s = rsmc_dataset_synthesize(&spec, &data); s != RSMC_OK) return report(s);
    const auto s = rsmc_dataset_save(data, synth_out.c_str());
    rsmc_shape shape{};
    rsmc_dataset_shape(data, &shape);
    rsmc_dataset_destroy(data);
    if (s != RSMC_OK) return report(s);
    std::cout << "wrote " << synth_out << ": B=" << shape.batch << " T=" << shape.time << " F=" << shape.features
              << " C=" << shape.classes << " S=" << shape.subjects << '\n';
    return 0;
  }

  if (*loso) {
    ConfigPtr config;
    if (auto s = loso_opts.build(loso, config); s != RSMC_OK) return report(s);
    print_echo(config.get());
    rsmc_loso_summary summary{};
    if (auto s = rsmc_loso_run(config.get(), nullptr, print_progress, nullptr, &summary); s != RSMC_OK) {
      return report(s);
    }
    std::printf("LOSO over %zu folds: accuracy %.2f +/- %.2f, F1 %.2f +/- %.2f\n", summary.folds,
                summary.accuracy.mean, summary.accuracy.std, summary.f1.mean, summary.f1.std);
    return 0;
  }

  if (*train) {
    ConfigPtr config;
    if (auto s = train_opts.build(train, config); s != RSMC_OK) return report(s);
    print_echo(config.get());
    rsmc_fold_summary fold{};
    if (auto s = rsmc_train_fold(config.get(), test_subject, nullptr, &fold); s != RSMC_OK) return report(s);
    std::printf("held-out subject %d: accuracy %.2f, F1 %.2f, sensitivity %.2f, specificity %.2f (%d epochs)\n",
                fold.held_out_subject, fold.accuracy, fold.f1, fold.sensitivity, fold.specificity, fold.epochs_run);
    return 0;
  }

  if (*grad) {
    if (samples <= 0) {
      std::cerr << "error: --samples must be >= 1\n";
      return kExitUsage;
    }
    double worst = 0.0;
    if (auto s = rsmc_gradcheck(static_cast<size_t>(samples), grad_seed, force_dropout ? 1 : 0, &worst);
        s != RSMC_OK) {
      return report(s);
    }
    std::printf("gradcheck: %lld probes, worst relative error %.3e (tolerance %.0e)\n", samples, worst,
                kGradTolerance);
    return worst < kGradTolerance ? 0 : kExitNumeric;
  }

  if (*exp) {
    rsmc_status s = RSMC_OK;
    if (kind == "masks") {
      s = rsmc_export_masks(run_dir.c_str());
    } else if (kind == "confusion") {
      s = rsmc_export_confusion(run_dir.c_str());
    } else {
      if (subject < 0) {
        std::cerr << "error: spatial-attention export needs --subject\n";
        return kExitUsage;
      }
      s = rsmc_export_spatial_attention(run_dir.c_str(), subject);
    }
    if (s == RSMC_OK) std::cout << "wrote " << kind << " export under " << run_dir << "/exports\n";
    return report(s);
  }

  if (*masks) return report(rsmc_dump_masks(mask_t, mask_w, mask_p, mask_out.c_str()));

  if (*topo_dump) return report(rsmc_topology_dump(topo_out.c_str()));

  return kExitUsage;
}
