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


#include "fixedhead/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "fixedhead/checkpoint.hpp"
#include "fixedhead/errors.hpp"
#include "fixedhead/optim.hpp"

namespace fixedhead {

namespace {

using nlohmann::json;

constexpr std::uint64_t kShuffleStream = 10;
constexpr std::uint64_t kAugmentStream = 11;

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!it->is_number_unsigned()) throw ConfigError(where + key + " must be a non-negative integer");
  }
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + key + " has the wrong type");
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError((where.empty() ? std::string("config") : where) + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!known.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::vector<Tensor> fixed_values(const Model& model) {
  std::vector<Tensor> out;
  for (const Parameter* p : model.parameters())
    if (!p->trainable) out.push_back(p->value);
  return out;
}

void check_fixed_unchanged(const Model& model, const std::vector<Tensor>& reference, const char* when) {
  std::size_t i = 0;
  for (const Parameter* p : model.parameters()) {
    if (p->trainable) continue;
    if (i >= reference.size() || !bit_identical(p->value, reference[i])) {
      throw ContractError("fixed parameter '" + p->name + "' changed " + when);
    }
    ++i;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (momentum < 0.0 || !std::isfinite(momentum)) throw ConfigError("momentum must be non-negative");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay)) throw ConfigError("weight_decay must be non-negative");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (num_classes < 2) throw ConfigError("classes must be at least 2");
  for (std::size_t i = 0; i < lr_milestones.size(); ++i) {
    if (lr_milestones[i] >= epochs) {
      throw ConfigError("lr milestone " + std::to_string(lr_milestones[i]) + " is not below epochs (" +
                        std::to_string(epochs) + ")");
    }
    if (i > 0 && lr_milestones[i] <= lr_milestones[i - 1]) throw ConfigError("lr milestones must be strictly increasing");
  }
  if (normalization.mean.size() != normalization.std.size() || normalization.mean.empty()) {
    throw ConfigError("normalization mean and std need one entry per channel");
  }
  for (double s : normalization.std)
    if (!(s > 0.0)) throw ConfigError("normalization std must be positive");
  if (augment.hflip_prob < 0.0 || augment.hflip_prob > 1.0) throw ConfigError("hflip_prob must lie in [0, 1]");
  if (data.kind == DataSource::Kind::Idx &&
      (data.train_images.empty() || data.train_labels.empty() || data.test_images.empty() || data.test_labels.empty())) {
    throw ConfigError("idx data needs train_images, train_labels, test_images and test_labels");
  }
  if (data.kind == DataSource::Kind::Synth && (data.synth_per_class == 0 || data.synth_test_per_class == 0)) {
    throw ConfigError("synthetic data needs a positive per_class and test_per_class");
  }
}

ModelConfig TrainConfig::model_config(std::size_t input_channels) const {
  return {.preset = preset, .widths = widths, .input_channels = input_channels, .num_classes = num_classes,
          .head = head, .seed = seed};
}

TrainConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"head", "preset", "widths", "classes", "epochs", "batch_size", "lr", "momentum", "weight_decay",
                     "lr_milestones", "seed", "data", "augment", "normalization", "record_wall_time"},
                 "");
  TrainConfig cfg;
  std::string head = std::string(head_kind_name(cfg.head));
  read_field(j, "head", head, "");
  cfg.head = parse_head_kind(head);
  read_field(j, "preset", cfg.preset, "");
  read_field(j, "widths", cfg.widths, "");
  read_field(j, "classes", cfg.num_classes, "");
  read_field(j, "epochs", cfg.epochs, "");
  read_field(j, "batch_size", cfg.batch_size, "");
  read_field(j, "lr", cfg.lr, "");
  read_field(j, "momentum", cfg.momentum, "");
  read_field(j, "weight_decay", cfg.weight_decay, "");
  read_field(j, "lr_milestones", cfg.lr_milestones, "");
  read_field(j, "seed", cfg.seed, "");
  read_field(j, "record_wall_time", cfg.record_wall_time, "");

  if (auto it = j.find("data"); it != j.end()) {
    const json& d = *it;
    reject_unknown(d, {"source", "per_class", "test_per_class", "size", "seed", "train_images", "train_labels",
                       "test_images", "test_labels"},
                   "data.");
    std::string source = "synth";
    read_field(d, "source", source, "data.");
    if (source == "synth") {
      cfg.data.kind = DataSource::Kind::Synth;
    } else if (source == "idx") {
      cfg.data.kind = DataSource::Kind::Idx;
    } else {
      throw ConfigError("data.source must be \"synth\" or \"idx\", got \"" + source + "\"");
    }
    read_field(d, "per_class", cfg.data.synth_per_class, "data.");
    read_field(d, "test_per_class", cfg.data.synth_test_per_class, "data.");
    read_field(d, "size", cfg.data.synth_size, "data.");
    read_field(d, "seed", cfg.data.synth_seed, "data.");
    std::string p;
    if (d.contains("train_images")) read_field(d, "train_images", p, "data."), cfg.data.train_images = p;
    if (d.contains("train_labels")) read_field(d, "train_labels", p, "data."), cfg.data.train_labels = p;
    if (d.contains("test_images")) read_field(d, "test_images", p, "data."), cfg.data.test_images = p;
    if (d.contains("test_labels")) read_field(d, "test_labels", p, "data."), cfg.data.test_labels = p;
  }
  if (auto it = j.find("augment"); it != j.end()) {
    reject_unknown(*it, {"pad", "crop", "hflip_prob"}, "augment.");
    read_field(*it, "pad", cfg.augment.pad, "augment.");
    read_field(*it, "crop", cfg.augment.crop, "augment.");
    read_field(*it, "hflip_prob", cfg.augment.hflip_prob, "augment.");
  }
  if (auto it = j.find("normalization"); it != j.end()) {
    reject_unknown(*it, {"mean", "std"}, "normalization.");
    read_field(*it, "mean", cfg.normalization.mean, "normalization.");
    read_field(*it, "std", cfg.normalization.std, "normalization.");
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string config_to_json(const TrainConfig& cfg) {
  json j;
  j["head"] = std::string(head_kind_name(cfg.head));
  j["preset"] = cfg.preset;
  j["widths"] = cfg.widths;
  j["classes"] = cfg.num_classes;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["momentum"] = cfg.momentum;
  j["weight_decay"] = cfg.weight_decay;
  j["lr_milestones"] = cfg.lr_milestones;
  j["seed"] = cfg.seed;
  j["record_wall_time"] = cfg.record_wall_time;
  json d;
  if (cfg.data.kind == DataSource::Kind::Synth) {
    d["source"] = "synth";
    d["per_class"] = cfg.data.synth_per_class;
    d["test_per_class"] = cfg.data.synth_test_per_class;
    d["size"] = cfg.data.synth_size;
    d["seed"] = cfg.data.synth_seed;
  } else {
    d["source"] = "idx";
    d["train_images"] = cfg.data.train_images.string();
    d["train_labels"] = cfg.data.train_labels.string();
    d["test_images"] = cfg.data.test_images.string();
    d["test_labels"] = cfg.data.test_labels.string();
  }
  j["data"] = d;
  j["augment"] = {{"pad", cfg.augment.pad}, {"crop", cfg.augment.crop}, {"hflip_prob", cfg.augment.hflip_prob}};
  j["normalization"] = {{"mean", cfg.normalization.mean}, {"std", cfg.normalization.std}};
  return j.dump(2);
}

double step_lr(std::size_t epoch, const TrainConfig& cfg) {
  double lr = cfg.lr;
  for (std::size_t m : cfg.lr_milestones)
    if (m <= epoch) lr /= 10.0;
  return lr;
}

std::string format_metrics_row(const MetricsRow& row) {
  return std::to_string(row.epoch) + "," + fmt("%.6f", row.train_loss) + "," + fmt("%.6f", row.train_acc) + "," +
         fmt("%.6f", row.test_acc) + "," + fmt("%.6g", row.lr) + "," + std::to_string(row.wall_ms);
}

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const MetricsRow& r : rows) out += format_metrics_row(r) + "\n";
  return out;
}

Datasets load_datasets(const TrainConfig& cfg) {
  Datasets d;
  if (cfg.data.kind == DataSource::Kind::Synth) {
    d.train = data::synth_blobs(cfg.num_classes, cfg.data.synth_per_class, cfg.data.synth_size, cfg.data.synth_seed,
                                data::Split::Train);
    d.test = data::synth_blobs(cfg.num_classes, cfg.data.synth_test_per_class, cfg.data.synth_size,
                               mix64(cfg.data.synth_seed), data::Split::Test);
  } else {
    d.train = data::read_idx(cfg.data.train_images, cfg.data.train_labels, cfg.num_classes, data::Split::Train);
    d.test = data::read_idx(cfg.data.test_images, cfg.data.test_labels, cfg.num_classes, data::Split::Test);
  }
  return d;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

double evaluate(Model& model, const data::Dataset& ds, const data::Normalization& norm, std::size_t batch_size) {
  if (ds.num_classes != model.config().num_classes) {
    throw ConfigError("model has " + std::to_string(model.config().num_classes) + " classes but the dataset has " +
                      std::to_string(ds.num_classes));
  }
  if (ds.size() == 0) throw PreconditionError("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  data::BatchIterator it(ds, batch_size, std::nullopt, norm);
  while (auto b = it.next()) {
    Tape tape;
    const ForwardResult f = model.forward(tape, b->x, Mode::Infer);
    const std::vector<int> pred = argmax_rows(f.logits.value());
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred[i] == b->y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

TrainResult train(const TrainConfig& cfg, const Datasets& data, const TrainOptions& opts) {
  cfg.validate();
  const data::Dataset& train_ds = data.train;
  if (train_ds.num_classes != cfg.num_classes || data.test.num_classes != cfg.num_classes) {
    throw ConfigError("config has " + std::to_string(cfg.num_classes) + " classes but the data has " +
                      std::to_string(train_ds.num_classes));
  }
  if (train_ds.size() == 0) throw PreconditionError("training set is empty");

  const ModelConfig mcfg = cfg.model_config(train_ds.channels);
  const std::vector<Tensor> reference = fixed_values(build_model(mcfg));

  std::optional<Model> model;
  std::vector<MetricsRow> rows;
  std::size_t start_epoch = 0;
  if (opts.resume_from) {
    Checkpoint ck = load_checkpoint(*opts.resume_from);
    const ModelConfig& saved = ck.model.config();
    if (saved.preset != mcfg.preset || saved.widths != mcfg.widths || saved.num_classes != mcfg.num_classes ||
        saved.head != mcfg.head || saved.input_channels != mcfg.input_channels || saved.seed != mcfg.seed) {
      throw ConfigError("checkpoint " + opts.resume_from->string() + " was trained with a different model config");
    }
    start_epoch = ck.epochs_completed;
    rows = std::move(ck.metrics);
    model.emplace(std::move(ck.model));
    check_fixed_unchanged(*model, reference, "across save and load");
  } else {
    model.emplace(mcfg);
  }

  const std::vector<Parameter*> params = model->parameters();
  const Rng root(cfg.seed);
  for (std::size_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = step_lr(epoch, cfg);
    const SgdOptions sgd{.lr = lr, .momentum = cfg.momentum, .weight_decay = cfg.weight_decay};
    data::BatchIterator it(train_ds, cfg.batch_size, root.split(kShuffleStream).split(epoch).key(), cfg.normalization,
                           cfg.augment, root.split(kAugmentStream).split(epoch).key());

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    while (auto b = it.next()) {
      Tape tape;
      const ForwardResult f = model->forward(tape, b->x, Mode::Train);
      const Var loss = softmax_cross_entropy(f.logits, b->y);
      const double l = loss.value()[0];
      if (!std::isfinite(l)) {
        throw DivergenceError("loss became " + std::string(std::isnan(l) ? "NaN" : "infinite") + " at epoch " +
                              std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      }
      tape.backward(loss);
      sgd_step(params, sgd);
      loss_sum += l * static_cast<double>(b->y.size());
      const std::vector<int> pred = argmax_rows(f.logits.value());
      for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == b->y[i]) ++correct;
      ++batch_index;
    }

    MetricsRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train_ds.size());
    row.train_acc = static_cast<double>(correct) / static_cast<double>(train_ds.size());
    row.test_acc = data.test.size() ? evaluate(*model, data.test, cfg.normalization) : 0.0;
    row.lr = lr;
    if (cfg.record_wall_time) {
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    }
    rows.push_back(row);
    if (opts.on_epoch) opts.on_epoch(row);
    if (opts.metrics_path) write_file_atomic(*opts.metrics_path, format_metrics_csv(rows));
  }

  check_fixed_unchanged(*model, reference, "during training");
  if (opts.checkpoint_dir) save_checkpoint(*opts.checkpoint_dir, *model, cfg, cfg.epochs, rows);
  return {std::move(*model), std::move(rows)};
}

}  // namespace fixedhead
