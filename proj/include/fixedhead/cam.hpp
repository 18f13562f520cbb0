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
#include <string>
#include <vector>

#include "fixedhead/model.hpp"

namespace fixedhead {

// Per-class activation maps of one image taken straight from the feature map
// entering global average pooling. Only meaningful for an identity head,
// where channel c of that map is the evidence for class c.
struct Heatmap {
  std::string image_id;
  std::size_t num_classes = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> maps;  // K x H' x W'
  std::vector<double> logits;
  std::vector<double> means;
  int predicted = 0;

  std::span<const double> map(std::size_t c) const {
    return std::span(maps).subspan(c * height * width, height * width);
  }
};

/// Runs one image (1 x C x H x W, already normalized) in inference mode.
/// Throws UnsupportedHeadError unless the model has an identity head, and
/// ContractError if a channel mean differs from its logit.
Heatmap compute_cam(Model& model, const Tensor& image, std::string image_id);

/// Min-max scales a map to 0..255 (rounded); a constant map becomes zeros.
std::vector<std::uint8_t> normalize_map(std::span<const double> map);

/// Binary PGM (P5, maxval 255).
std::string encode_pgm(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width);

/// Writes `<id>_class<c>.pgm` for every class and `<id>.json` holding the
/// prediction, logits and channel means. Returns the written paths.
std::vector<std::filesystem::path> write_cam(const Heatmap& cam, const std::filesystem::path& out_dir);

}  // namespace fixedhead
