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

#include "rsmc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rsmc/error.hpp"
#include "rsmc/rng.hpp"

#ifndef RSMC_VERSION_STRING
#define RSMC_VERSION_STRING "unknown"
#endif

namespace rsmc {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("invalid value '" + value + "' for config key '" + key + "' (expected " + expected + ")");
}

template <typename T>
T parse_int(const std::string& key, const std::string& value) {
  T out{};
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) bad_value(key, value, "an integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  if (value.empty()) bad_value(key, value, "a number");
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size()) bad_value(key, value, "a number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
std::string fmt(bool v) { return v ? "true" : "false"; }
template <typename T>
  requires std::is_integral_v<T>
std::string fmt(T v) {
  return std::to_string(v);
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field int_field(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_int<T>(k, v); },
          [member](const RunConfig& c) { return fmt(c.*member); }};
}
Field double_field(double RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); },
          [member](const RunConfig& c) { return fmt(c.*member); }};
}
Field bool_field(bool RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
          [member](const RunConfig& c) { return fmt(c.*member); }};
}
// Fields reached through a nested struct.
template <typename Outer, typename T>
Field nested(Outer RunConfig::*outer, T Outer::*inner) {
  return {[outer, inner](RunConfig& c, const std::string& k, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*outer.*inner = parse_bool(k, v);
            } else if constexpr (std::is_floating_point_v<T>) {
              c.*outer.*inner = parse_double(k, v);
            } else {
              c.*outer.*inner = parse_int<T>(k, v);
            }
          },
          [outer, inner](const RunConfig& c) { return fmt(c.*outer.*inner); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"dataset",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.dataset = v; },
        [](const RunConfig& c) { return c.dataset; }}},
      {"synth", bool_field(&RunConfig::synth)},
      {"synth_subjects", nested(&RunConfig::synth_spec, &SynthSpec::subjects)},
      {"synth_classes", nested(&RunConfig::synth_spec, &SynthSpec::classes)},
      {"synth_per_subject", nested(&RunConfig::synth_spec, &SynthSpec::per_subject)},
      {"synth_window", nested(&RunConfig::synth_spec, &SynthSpec::window)},
      {"synth_snr", nested(&RunConfig::synth_spec, &SynthSpec::snr)},
      {"synth_shift", nested(&RunConfig::synth_spec, &SynthSpec::shift)},
      {"synth_seed", nested(&RunConfig::synth_spec, &SynthSpec::seed)},
      {"output",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.output = v; },
        [](const RunConfig& c) { return c.output; }}},
      {"fold_workers", int_field(&RunConfig::fold_workers)},
      {"seed", int_field(&RunConfig::seed)},
      {"lr", double_field(&RunConfig::lr)},
      {"weight_decay", double_field(&RunConfig::weight_decay)},
      {"lr_step", int_field(&RunConfig::lr_step)},
      {"lr_factor", double_field(&RunConfig::lr_factor)},
      {"epochs", int_field(&RunConfig::epochs)},
      {"batch", int_field(&RunConfig::batch)},
      {"noise", double_field(&RunConfig::noise)},
      {"patience", int_field(&RunConfig::patience)},
      {"val_fraction", double_field(&RunConfig::val_fraction)},
      {"hidden", nested(&RunConfig::model, &ModelConfig::hidden)},
      {"heads", nested(&RunConfig::model, &ModelConfig::heads)},
      {"local_window", nested(&RunConfig::model, &ModelConfig::local_window)},
      {"sparse_period", nested(&RunConfig::model, &ModelConfig::sparse_period)},
      {"embed_dim", nested(&RunConfig::model, &ModelConfig::embed)},
      {"classifier_hidden", nested(&RunConfig::model, &ModelConfig::classifier_hidden)},
      {"dropout", nested(&RunConfig::model, &ModelConfig::dropout)},
      {"bn_momentum", nested(&RunConfig::model, &ModelConfig::bn_momentum)},
      {"untied_branches", nested(&RunConfig::model, &ModelConfig::untied_branches)},
      {"lambda_contrast", nested(&RunConfig::loss, &LossWeights::contrast)},
      {"lambda_orth", nested(&RunConfig::loss, &LossWeights::orth)},
      {"lambda_mmd", nested(&RunConfig::loss, &LossWeights::mmd)},
      {"tau", nested(&RunConfig::loss, &LossWeights::tau)},
      {"no_align", nested(&RunConfig::model, &ModelConfig::no_align)},
      {"no_rgrm", nested(&RunConfig::model, &ModelConfig::no_rgrm)},
      {"no_mstt", nested(&RunConfig::model, &ModelConfig::no_mstt)},
      {"no_codg", nested(&RunConfig::model, &ModelConfig::no_codg)},
      {"no_mmd", bool_field(&RunConfig::no_mmd)},
      {"no_contrast", bool_field(&RunConfig::no_contrast)},
      {"no_orth", bool_field(&RunConfig::no_orth)},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

LossWeights RunConfig::effective_loss() const {
  LossWeights w = loss;
  if (model.no_codg || no_contrast) w.contrast = 0.0;
  if (model.no_codg || no_orth) w.orth = 0.0;
  if (model.no_codg || no_mmd) w.mmd = 0.0;
  return w;
}

ModelConfig RunConfig::model_config(Index features, Index time, Index classes) const {
  ModelConfig m = model;
  m.features = features;
  m.time = time;
  m.classes = classes;
  m.seed = seed;
  return m;
}

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, trim(value)); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, f] : fields()) n.push_back(name);
    return n;
  }();
  return names;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::string line;
  int number = 0;
  std::vector<std::string> unknown;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const auto& names = keys();
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      unknown.push_back(key);
      continue;
    }
    set(key, line.substr(eq + 1));
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config key";
    msg += unknown.size() > 1 ? "s" : "";
    for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", '" : " '") + unknown[i] + "'";
    throw ConfigError(msg + " in " + path.string());
  }
}

void RunConfig::apply_environment() {
  if (const char* env = std::getenv("RSMC_SEED"); env != nullptr && *env != '\0') {
    try {
      set("seed", env);
    } catch (const ConfigError&) {
      throw ConfigError("RSMC_SEED must be a non-negative integer, got '" + std::string(env) + "'");
    }
  }
}

std::string RunConfig::echo(Index time) const {
  std::ostringstream os;
  for (const auto& [name, f] : fields()) os << name << '=' << f.get(*this) << '\n';
  if (model.heads > 0) os << "d_k=" << model.hidden / model.heads << '\n';
  if (time > 0) {
    ModelConfig m = model;
    m.time = time;
    os << "time=" << time << '\n' << "effective_sparse_period=" << m.effective_sparse_period() << '\n';
  }
  const LossWeights w = effective_loss();
  os << "effective_lambda_contrast=" << fmt(w.contrast) << '\n'
     << "effective_lambda_orth=" << fmt(w.orth) << '\n'
     << "effective_lambda_mmd=" << fmt(w.mmd) << '\n'
     << "version=" << RSMC_VERSION_STRING << '\n';
  return os.str();
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> v = validate_model_config(model_config(model.features, std::max<Index>(model.time, 1), 1));
  // features/time/classes come from the dataset; drop complaints about them.
  std::erase_if(v, [](const std::string& s) { return s.starts_with("features") || s.starts_with("window"); });
  if (!(lr > 0)) v.push_back("lr must be > 0");
  if (!(weight_decay >= 0)) v.push_back("weight_decay must be >= 0");
  if (lr_step < 1) v.push_back("lr_step must be >= 1");
  if (!(lr_factor > 0)) v.push_back("lr_factor must be > 0");
  if (epochs < 1) v.push_back("epochs must be >= 1");
  if (batch < 2) v.push_back("batch must be >= 2");
  if (!(noise >= 0)) v.push_back("noise must be >= 0");
  if (patience < 0) v.push_back("patience must be >= 0");
  if (!(val_fraction >= 0 && val_fraction < 1)) v.push_back("val_fraction must be in [0, 1)");
  if (!(loss.contrast >= 0 && loss.orth >= 0 && loss.mmd >= 0)) v.push_back("lambda values must be >= 0");
  if (!(loss.tau > 0)) v.push_back("tau must be > 0");
  if (fold_workers < 1) v.push_back("fold_workers must be >= 1");
  if (synth) {
    for (auto& s : validate_synth_spec(synth_spec)) v.push_back("synth: " + s);
  }
  return v;
}

std::string config_hash(const std::string& echo) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(echo)));
  return buf;
}

}  // namespace rsmc
