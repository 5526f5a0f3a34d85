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

#include "rsmc/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <type_traits>

#include "json.hpp"
#include "le_io.hpp"

namespace rsmc {
namespace {

using json = nlohmann::json;

std::filesystem::path with_ext(const std::filesystem::path& prefix, const char* ext) {
  return std::filesystem::path(prefix.string() + ext);
}

template <typename S>
constexpr const char* precision_name() {
  return std::is_same_v<S, float> ? "float32" : "float64";
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct Entry {
  std::string path;
  Index rows = 0;
  Index cols = 0;
  std::size_t offset = 0;
  bool trainable = true;
};

struct Manifest {
  CheckpointInfo info;
  std::vector<Entry> entries;
  std::string payload;
};

Manifest read_manifest(const std::filesystem::path& prefix) {
  const auto manifest_path = with_ext(prefix, ".json");
  json doc;
  try {
    doc = json::parse(read_all(manifest_path));
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint manifest '" + manifest_path.string() + "': " + e.what(), e.byte);
  }
  Manifest m;
  try {
    if (doc.at("format").get<std::string>() != "rsmc-checkpoint") {
      throw ParseError("not an rsmc checkpoint manifest", 0);
    }
    m.info.precision = doc.at("precision").get<std::string>();
    m.info.global_step = doc.at("global_step").get<std::uint64_t>();
    for (const auto& t : doc.at("tensors")) {
      Entry e;
      e.path = t.at("path").get<std::string>();
      e.rows = t.at("shape").at(0).get<Index>();
      e.cols = t.at("shape").at(1).get<Index>();
      e.offset = t.at("offset").get<std::size_t>();
      e.trainable = t.value("trainable", true);
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError("checkpoint manifest '" + manifest_path.string() + "': " + e.what(), 0);
  }
  if (m.info.precision != "float32" && m.info.precision != "float64") {
    throw ParseError("unsupported checkpoint precision '" + m.info.precision + "'", 0);
  }
  m.payload = read_all(with_ext(prefix, ".bin"));
  return m;
}

template <typename S>
Matrix<S> decode(const Manifest& m, const Entry& e) {
  const std::size_t width = m.info.precision == "float32" ? 4 : 8;
  const auto count = static_cast<std::size_t>(e.rows * e.cols);
  if (e.offset + count * width > m.payload.size()) {
    throw ParseError("checkpoint payload truncated for '" + e.path + "'", m.payload.size());
  }
  Matrix<S> out(e.rows, e.cols);
  const auto* base = reinterpret_cast<const unsigned char*>(m.payload.data()) + e.offset;
  for (std::size_t i = 0; i < count; ++i) {
    out.data()[i] = width == 4 ? static_cast<S>(le::get_f32(base + 4 * i))
                               : static_cast<S>(le::get_f64(base + 8 * i));
  }
  return out;
}

}  // namespace

template <typename S>
void save_checkpoint(const ParamStore<S>& store, const std::filesystem::path& prefix,
                     std::uint64_t global_step) {
  std::string payload;
  json tensors = json::array();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    tensors.push_back({{"path", p.path},
                       {"shape", {p.value.rows(), p.value.cols()}},
                       {"offset", payload.size()},
                       {"trainable", p.trainable}});
    for (Index k = 0; k < p.value.size(); ++k) {
      if constexpr (std::is_same_v<S, float>) {
        le::put_f32(payload, p.value.data()[k]);
      } else {
        le::put_f64(payload, p.value.data()[k]);
      }
    }
  }
  json doc = {{"format", "rsmc-checkpoint"},
              {"version", 1},
              {"precision", precision_name<S>()},
              {"global_step", global_step},
              {"payload", with_ext(prefix, ".bin").filename().string()},
              {"tensors", tensors}};
  {
    std::ofstream out(with_ext(prefix, ".bin"), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + with_ext(prefix, ".bin").string() + "'");
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  std::ofstream out(with_ext(prefix, ".json"), std::ios::trunc);
  if (!out) throw IoError("cannot write '" + with_ext(prefix, ".json").string() + "'");
  out << doc.dump(2) << '\n';
}

template <typename S>
ParamStore<S> load_checkpoint(const std::filesystem::path& prefix, CheckpointInfo* info) {
  const Manifest m = read_manifest(prefix);
  ParamStore<S> store;
  for (const auto& e : m.entries) store.add(e.path, decode<S>(m, e), e.trainable);
  if (info) *info = m.info;
  return store;
}

template <typename S>
CheckpointInfo restore_checkpoint(ParamStore<S>& store, const std::filesystem::path& prefix) {
  const Manifest m = read_manifest(prefix);
  for (const auto& e : m.entries) {
    auto& p = store.at(e.path);
    if (p.value.rows() != e.rows || p.value.cols() != e.cols) {
      throw DimensionError("checkpoint tensor '" + e.path + "' has shape " +
                           std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                           ", model expects " + std::to_string(p.value.rows()) + "x" +
                           std::to_string(p.value.cols()));
    }
    p.value = decode<S>(m, e);
  }
  return m.info;
}

template void save_checkpoint<float>(const ParamStore<float>&, const std::filesystem::path&, std::uint64_t);
template void save_checkpoint<double>(const ParamStore<double>&, const std::filesystem::path&, std::uint64_t);
template ParamStore<float> load_checkpoint<float>(const std::filesystem::path&, CheckpointInfo*);
template ParamStore<double> load_checkpoint<double>(const std::filesystem::path&, CheckpointInfo*);
template CheckpointInfo restore_checkpoint<float>(ParamStore<float>&, const std::filesystem::path&);
template CheckpointInfo restore_checkpoint<double>(ParamStore<double>&, const std::filesystem::path&);

}  // namespace rsmc
