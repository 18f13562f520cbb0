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
#include <filesystem>
#include <vector>

#include "fixedhead/model.hpp"
#include "fixedhead/train.hpp"

namespace fixedhead {

inline constexpr int kCheckpointSchema = 1;

// A saved run: a directory holding manifest.json and one little-endian f64
// blob per named tensor (parameters, BatchNorm running statistics and
// optimizer momentum).
struct Checkpoint {
  TrainConfig config;
  std::size_t input_channels = 1;
  std::size_t epochs_completed = 0;
  std::vector<MetricsRow> metrics;
  Model model;
};

/// Replaces `dir` atomically: everything is written to a sibling temporary
/// directory that is then renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const Model& model, const TrainConfig& cfg,
                     std::size_t epochs_completed, const std::vector<MetricsRow>& metrics);

/// Throws IoError when files are missing, FormatError for a wrong schema,
/// unknown or missing tensors and shape mismatches, LengthError for a blob
/// of the wrong size.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Raw little-endian encoding used for the blobs.
std::vector<std::uint8_t> encode_f64(std::span<const double> values);
std::vector<double> decode_f64(std::span<const std::uint8_t> bytes);

}  // namespace fixedhead
