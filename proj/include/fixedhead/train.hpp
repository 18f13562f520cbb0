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


#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fixedhead/data.hpp"
#include "fixedhead/model.hpp"

namespace fixedhead {

// Where the training and test images come from: either IDX file pairs or the
// synthetic generator.
struct DataSource {
  enum class Kind { Synth, Idx };
  Kind kind = Kind::Synth;

  std::size_t synth_per_class = 200;
  std::size_t synth_test_per_class = 100;
  std::size_t synth_size = 32;
  std::uint64_t synth_seed = 1;

  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
};

struct TrainConfig {
  HeadKind head = HeadKind::Learned;
  std::string preset = "tiny3";
  std::vector<std::size_t> widths = {16, 32, 64};
  std::size_t num_classes = 10;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<std::size_t> lr_milestones = {6, 8};
  std::uint64_t seed = 0;
  DataSource data;
  data::AugmentConfig augment;
  data::Normalization normalization = {{0.0}, {1.0}};
  /// When false the wall_ms column is written as 0, making the metrics CSV a
  /// pure function of (seed, config, dataset).
  bool record_wall_time = true;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
  ModelConfig model_config(std::size_t input_channels) const;
};

/// Reads a JSON config. Missing keys keep their defaults; unknown keys and
/// wrongly typed values throw ConfigError.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const TrainConfig& cfg);

/// base_lr * 10^-(number of milestones <= epoch).
double step_lr(std::size_t epoch, const TrainConfig& cfg);

struct MetricsRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double lr = 0.0;
  std::int64_t wall_ms = 0;
};

inline constexpr const char* kMetricsHeader = "epoch,train_loss,train_acc,test_acc,lr,wall_ms";

std::string format_metrics_row(const MetricsRow& row);
/// Header plus one line per row.
std::string format_metrics_csv(const std::vector<MetricsRow>& rows);

struct Datasets {
  data::Dataset train;
  data::Dataset test;
};

/// Loads or generates both splits as described by cfg.data.
Datasets load_datasets(const TrainConfig& cfg);

struct TrainOptions {
  /// Rewritten (atomically) after every epoch when set.
  std::optional<std::filesystem::path> metrics_path;
  /// Written on completion when set.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Continue a run from this checkpoint instead of a fresh model.
  std::optional<std::filesystem::path> resume_from;
  /// Called after each epoch, e.g. for progress logging.
  std::function<void(const MetricsRow&)> on_epoch;
};

struct TrainResult {
  Model model;
  std::vector<MetricsRow> rows;
};

/// SGD with momentum under the step schedule. Throws DivergenceError naming
/// the epoch and batch when the loss stops being finite, and ContractError if
/// a fixed parameter changed by the end of training.
TrainResult train(const TrainConfig& cfg, const Datasets& data, const TrainOptions& opts = {});

/// Top-1 accuracy with BatchNorm in inference mode and no augmentation.
/// Throws ConfigError when the dataset's class count differs from the model's.
double evaluate(Model& model, const data::Dataset& ds, const data::Normalization& norm,
                std::size_t batch_size = 100);

/// Writes `contents` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace fixedhead
