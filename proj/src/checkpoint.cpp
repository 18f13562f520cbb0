/*
 * Copyright 2026 The fixedhead Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "fixedhead/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "fixedhead/errors.hpp"

namespace fixedhead {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct NamedTensor {
  std::string name;
  std::string role;
  bool trainable = false;
  Shape shape;
  std::span<double> values;
};

// Every tensor of a model in manifest order. Spans point into the model.
std::vector<NamedTensor> collect(Model& model) {
  std::vector<NamedTensor> out;
  for (Parameter* p : model.parameters()) {
    out.push_back({p->name, "parameter", p->trainable, p->value.shape(), p->value.data()});
    if (p->trainable) {
      if (!p->momentum) p->momentum.emplace(p->value.size(), 0.0);
      out.push_back({p->name + ".momentum", "momentum", false, p->value.shape(), *p->momentum});
    }
  }
  for (std::size_t i = 0; i < model.blocks().size(); ++i) {
    BatchNormBuffers& b = model.blocks()[i].buffers;
    const std::string base = "block" + std::to_string(i) + ".bn.";
    out.push_back({base + "running_mean", "buffer", false, {b.running_mean.size()}, b.running_mean});
    out.push_back({base + "running_var", "buffer", false, {b.running_var.size()}, b.running_var});
  }
  return out;
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json metrics_json(const std::vector<MetricsRow>& rows) {
  json out = json::array();
  for (const MetricsRow& r : rows) {
    out.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"train_acc", r.train_acc},
                   {"test_acc", r.test_acc}, {"lr", r.lr}, {"wall_ms", r.wall_ms}});
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_f64(std::span<const double> values) {
  std::vector<std::uint8_t> out(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return out;
}

std::vector<double> decode_f64(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 8 != 0) throw LengthError("f64 blob of " + std::to_string(bytes.size()) + " bytes");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

void save_checkpoint(const fs::path& dir, const Model& model, const TrainConfig& cfg, std::size_t epochs_completed,
                     const std::vector<MetricsRow>& metrics) {
  Model copy = model;
  const std::vector<NamedTensor> tensors = collect(copy);

  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  json manifest;
  manifest["format"] = "fixedhead-checkpoint";
  manifest["schema"] = kCheckpointSchema;
  manifest["config"] = json::parse(config_to_json(cfg));
  manifest["input_channels"] = model.config().input_channels;
  manifest["epochs_completed"] = epochs_completed;
  manifest["head"] = {{"kind", std::string(head_kind_name(model.head().kind))},
                      {"n_c", model.head().n_c},
                      {"K", model.head().num_classes}};
  manifest["metrics"] = metrics_json(metrics);
  json list = json::array();
  for (const NamedTensor& t : tensors) {
    const std::string file = t.name + ".f64";
    list.push_back({{"name", t.name}, {"file", file}, {"shape", t.shape}, {"role", t.role}, {"trainable", t.trainable}});
    write_bytes(tmp / file, encode_f64(t.values));
  }
  manifest["tensors"] = list;
  const std::string text = manifest.dump(2) + "\n";
  write_bytes(tmp / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));

  if (fs::exists(dir)) {
    fs::path old = dir;
    old += ".old";
    fs::remove_all(old);
    fs::rename(dir, old);
    fs::rename(tmp, dir);
    fs::remove_all(old);
  } else {
    if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
    fs::rename(tmp, dir);
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("no checkpoint manifest at " + manifest_path.string());
  const std::vector<std::uint8_t> raw = read_bytes(manifest_path);

  json m;
  try {
    m = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  try {
    if (m.at("format").get<std::string>() != "fixedhead-checkpoint") {
      throw FormatError(manifest_path.string() + ": not a fixedhead checkpoint");
    }
    if (m.at("schema").get<int>() != kCheckpointSchema) {
      throw FormatError(manifest_path.string() + ": unsupported schema " + m.at("schema").dump());
    }
    TrainConfig cfg = parse_config(m.at("config").dump());
    const auto input_channels = m.at("input_channels").get<std::size_t>();
    Checkpoint ck{cfg, input_channels, m.at("epochs_completed").get<std::size_t>(), {},
                  Model(cfg.model_config(input_channels))};
    for (const json& r : m.at("metrics")) {
      ck.metrics.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                            r.at("train_acc").get<double>(), r.at("test_acc").get<double>(), r.at("lr").get<double>(),
                            r.at("wall_ms").get<std::int64_t>()});
    }

    const json& head = m.at("head");
    if (parse_head_kind(head.at("kind").get<std::string>()) != ck.model.head().kind ||
        head.at("n_c").get<std::size_t>() != ck.model.head().n_c ||
        head.at("K").get<std::size_t>() != ck.model.head().num_classes) {
      throw FormatError(manifest_path.string() + ": head record disagrees with the config");
    }

    std::map<std::string, const json*> entries;
    for (const json& t : m.at("tensors")) entries[t.at("name").get<std::string>()] = &t;
    std::vector<NamedTensor> tensors = collect(ck.model);
    if (entries.size() != tensors.size()) {
      throw FormatError(manifest_path.string() + ": expected " + std::to_string(tensors.size()) + " tensors, found " +
                        std::to_string(entries.size()));
    }
    for (NamedTensor& t : tensors) {
      auto it = entries.find(t.name);
      if (it == entries.end()) throw FormatError(manifest_path.string() + ": missing tensor '" + t.name + "'");
      const json& e = *it->second;
      if (e.at("shape").get<Shape>() != t.shape) {
        throw FormatError("tensor '" + t.name + "' has shape " + shape_string(e.at("shape").get<Shape>()) +
                          ", model expects " + shape_string(t.shape));
      }
      const std::vector<double> values = decode_f64(read_bytes(dir / e.at("file").get<std::string>()));
      if (values.size() != t.values.size()) {
        throw LengthError("tensor '" + t.name + "' holds " + std::to_string(values.size()) + " values, expected " +
                          std::to_string(t.values.size()));
      }
      std::copy(values.begin(), values.end(), t.values.begin());
    }
    return ck;
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace fixedhead
