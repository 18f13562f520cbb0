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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fixedhead/data.hpp"
#include "fixedhead/errors.hpp"

namespace fixedhead::data {

void Dataset::validate() const {
  if (images.size() != size() * image_size()) {
    throw ShapeError("dataset holds " + std::to_string(images.size()) + " pixels for " + std::to_string(size()) +
                     " images of " + std::to_string(image_size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw LabelError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
  }
}

Dataset synth_blobs(std::size_t num_classes, std::size_t n_per_class, std::size_t size, std::uint64_t seed,
                    Split split) {
  if (num_classes < 2) throw PreconditionError("synth_blobs needs at least two classes");
  if (size < 8) throw PreconditionError("synth_blobs needs images of at least 8x8 pixels");

  Dataset ds;
  ds.channels = 1;
  ds.height = ds.width = size;
  ds.num_classes = num_classes;
  ds.split = split;
  const std::size_t n = num_classes * n_per_class;
  ds.images.resize(n * size * size);
  ds.labels.resize(n);

  const double s = static_cast<double>(size);
  const double mid = (s - 1.0) / 2.0;
  const double radius = 0.28 * s;
  const double sigma_major = s / 9.0;
  const double sigma_minor = std::max(0.8, s / 28.0);
  const double jitter = 0.06 * s;

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % num_classes;
    ds.labels[i] = static_cast<int>(c);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(num_classes);
    const double angle = std::numbers::pi * static_cast<double>(c) / static_cast<double>(num_classes);
    const double cx = mid + radius * std::cos(phase) + jitter * (2.0 * rng.uniform() - 1.0);
    const double cy = mid + radius * std::sin(phase) + jitter * (2.0 * rng.uniform() - 1.0);
    const double ca = std::cos(angle), sa = std::sin(angle);
    std::uint8_t* img = ds.images.data() + i * size * size;
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        const double u = dx * ca + dy * sa, v = -dx * sa + dy * ca;
        const double bump = std::exp(-0.5 * (u * u / (sigma_major * sigma_major) + v * v / (sigma_minor * sigma_minor)));
        const double value = 30.0 + 190.0 * bump + 10.0 * rng.normal();
        img[y * size + x] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
      }
    }
  }
  return ds;
}

void check_augment(const AugmentConfig& cfg, std::size_t height, std::size_t width) {
  if (cfg.hflip_prob < 0.0 || cfg.hflip_prob > 1.0) throw ConfigError("hflip_prob must lie in [0, 1]");
  const std::size_t crop_h = cfg.crop ? cfg.crop : height;
  const std::size_t crop_w = cfg.crop ? cfg.crop : width;
  if (crop_h > height + 2 * cfg.pad || crop_w > width + 2 * cfg.pad) {
    throw ConfigError("crop " + std::to_string(crop_h) + " exceeds the padded image (" + std::to_string(height) + " + 2*" +
                      std::to_string(cfg.pad) + ")");
  }
}

AugmentDraw draw_augment(const AugmentConfig& cfg, std::size_t height, std::size_t width, Rng& rng) {
  check_augment(cfg, height, width);
  const std::size_t crop_h = cfg.crop ? cfg.crop : height;
  const std::size_t crop_w = cfg.crop ? cfg.crop : width;
  AugmentDraw d;
  d.flip = cfg.hflip_prob > 0.0 && rng.bernoulli(cfg.hflip_prob);
  d.dy = rng.below(height + 2 * cfg.pad - crop_h + 1);
  d.dx = rng.below(width + 2 * cfg.pad - crop_w + 1);
  return d;
}

std::vector<std::uint8_t> augment_image(std::span<const std::uint8_t> image, std::size_t channels, std::size_t height,
                                        std::size_t width, const AugmentConfig& cfg, const AugmentDraw& draw) {
  check_augment(cfg, height, width);
  const std::size_t crop_h = cfg.crop ? cfg.crop : height;
  const std::size_t crop_w = cfg.crop ? cfg.crop : width;
  const std::size_t ph = height + 2 * cfg.pad, pw = width + 2 * cfg.pad;
  if (draw.dy + crop_h > ph || draw.dx + crop_w > pw) throw ConfigError("crop offset outside the padded image");

  std::vector<std::uint8_t> out(channels * crop_h * crop_w, 0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < crop_h; ++y) {
      const std::size_t py = y + draw.dy;
      if (py < cfg.pad || py >= cfg.pad + height) continue;
      for (std::size_t x = 0; x < crop_w; ++x) {
        std::size_t px = x + draw.dx;
        if (draw.flip) px = pw - 1 - px;
        if (px < cfg.pad || px >= cfg.pad + width) continue;
        out[(c * crop_h + y) * crop_w + x] = image[(c * height + py - cfg.pad) * width + px - cfg.pad];
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> augment(std::span<const std::uint8_t> images, std::size_t count, std::size_t channels,
                                  std::size_t height, std::size_t width, const AugmentConfig& cfg, Rng& rng) {
  const std::size_t in_size = channels * height * width;
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    const AugmentDraw d = draw_augment(cfg, height, width, rng);
    const auto img = augment_image(images.subspan(i * in_size, in_size), channels, height, width, cfg, d);
    out.insert(out.end(), img.begin(), img.end());
  }
  return out;
}

Tensor to_tensor(std::span<const std::uint8_t> images, std::size_t count, std::size_t channels, std::size_t height,
                 std::size_t width, const Normalization& norm) {
  if (norm.mean.size() != channels || norm.std.size() != channels) {
    throw ConfigError("normalization has " + std::to_string(norm.mean.size()) + " means and " +
                      std::to_string(norm.std.size()) + " stds for " + std::to_string(channels) + " channels");
  }
  Tensor x({count, channels, height, width});
  const std::size_t hw = height * width;
  for (std::size_t n = 0; n < count; ++n)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t i = (n * channels + c) * hw + p;
        x[i] = (static_cast<double>(images[i]) / 255.0 - norm.mean[c]) / norm.std[c];
      }
  return x;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

BatchIterator::BatchIterator(const Dataset& ds, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed,
                             Normalization norm, AugmentConfig augment, std::uint64_t augment_seed)
    : ds_(&ds), batch_size_(batch_size), norm_(std::move(norm)), augment_(augment), augment_rng_(augment_seed) {
  if (batch_size == 0) throw PreconditionError("batch size must be at least 1");
  if (augment_.enabled()) check_augment(augment_, ds.height, ds.width);
  if (shuffle_seed) {
    order_ = shuffled_indices(ds.size(), *shuffle_seed);
  } else {
    order_.resize(ds.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  }
}

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  Batch b;
  b.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_), order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;

  const Dataset& ds = *ds_;
  std::size_t h = ds.height, w = ds.width;
  std::vector<std::uint8_t> raw;
  raw.reserve(b.indices.size() * ds.image_size());
  for (std::size_t i : b.indices) {
    b.y.push_back(ds.labels[i]);
    const auto img = ds.image(i);
    if (augment_.enabled()) {
      const AugmentDraw d = draw_augment(augment_, ds.height, ds.width, augment_rng_);
      const auto out = augment_image(img, ds.channels, ds.height, ds.width, augment_, d);
      raw.insert(raw.end(), out.begin(), out.end());
    } else {
      raw.insert(raw.end(), img.begin(), img.end());
    }
  }
  if (augment_.enabled() && augment_.crop) h = w = augment_.crop;
  b.x = to_tensor(raw, b.indices.size(), ds.channels, h, w, norm_);
  return b;
}

std::vector<Batch> batch_iter(const Dataset& ds, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed,
                              const Normalization& norm) {
  BatchIterator it(ds, batch_size, shuffle_seed, norm);
  std::vector<Batch> out;
  while (auto b = it.next()) out.push_back(std::move(*b));
  return out;
}

}  // namespace fixedhead::data
