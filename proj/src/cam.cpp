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


#include "fixedhead/cam.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "fixedhead/errors.hpp"
#include "fixedhead/train.hpp"

namespace fixedhead {

Heatmap compute_cam(Model& model, const Tensor& image, std::string image_id) {
  if (model.head().kind != HeadKind::FixedIdentity) {
    throw UnsupportedHeadError("class activation maps need an identity head, model has " +
                               std::string(head_kind_name(model.head().kind)));
  }
  if (image.shape().size() != 4 || image.shape()[0] != 1) {
    throw ShapeError("compute_cam expects a single 1 x C x H x W image, got " + shape_string(image.shape()));
  }
  Tape tape;
  const ForwardResult f = model.forward(tape, image, Mode::Infer);
  const Tensor& features = f.features.value();

  Heatmap cam;
  cam.image_id = std::move(image_id);
  cam.num_classes = features.shape()[1];
  cam.height = features.shape()[2];
  cam.width = features.shape()[3];
  cam.maps.assign(features.data().begin(), features.data().end());
  cam.logits.assign(f.logits.value().data().begin(), f.logits.value().data().end());
  for (std::size_t c = 0; c < cam.num_classes; ++c) {
    cam.means.push_back(spatial_mean(cam.map(c)));
    if (cam.means[c] != cam.logits[c]) {
      throw ContractError("channel " + std::to_string(c) + " mean differs from its logit");
    }
  }
  cam.predicted = argmax_rows(f.logits.value())[0];
  return cam;
}

std::vector<std::uint8_t> normalize_map(std::span<const double> map) {
  std::vector<std::uint8_t> out(map.size(), 0);
  if (map.empty()) return out;
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < map.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (map[i] - *lo) / range));
  }
  return out;
}

std::string encode_pgm(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width) {
  if (pixels.size() != height * width) throw ShapeError("pgm pixel count does not match its size");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

std::vector<std::filesystem::path> write_cam(const Heatmap& cam, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t c = 0; c < cam.num_classes; ++c) {
    const auto path = out_dir / (cam.image_id + "_class" + std::to_string(c) + ".pgm");
    write_file_atomic(path, encode_pgm(normalize_map(cam.map(c)), cam.height, cam.width));
    written.push_back(path);
  }
  nlohmann::json side;
  side["image"] = cam.image_id;
  side["predicted"] = cam.predicted;
  side["logits"] = cam.logits;
  side["means"] = cam.means;
  side["height"] = cam.height;
  side["width"] = cam.width;
  const auto path = out_dir / (cam.image_id + ".json");
  write_file_atomic(path, side.dump(2) + "\n");
  written.push_back(path);
  return written;
}

}  // namespace fixedhead
