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
#include <optional>
#include <span>
#include <vector>

#include "fixedhead/rng.hpp"
#include "fixedhead/tensor.hpp"

namespace fixedhead::data {

enum class Split { Train, Test };

// Labeled 8-bit images stored N x C x H x W.
struct Dataset {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_classes = 0;
  std::vector<std::uint8_t> images;
  std::vector<int> labels;
  Split split = Split::Train;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return channels * height * width; }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return std::span(images).subspan(i * image_size(), image_size());
  }
  /// Throws LabelError / ShapeError when the invariants do not hold.
  void validate() const;
};

// ---------------------------------------------------------------------------
// IDX files (big-endian header: 0x0000 type dims, then u32 extents, then data).

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // u8, 3 dims (N, H, W)
inline constexpr std::uint32_t kIdxImages4dMagic = 0x00000804;  // u8, 4 dims (N, C, H, W)
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // u8, 1 dim

/// Reads an image/label file pair; either may be gzip-compressed (detected
/// from the first two bytes). Throws FormatError on a wrong magic or
/// mismatched counts, LengthError on a short payload, LabelError when a
/// label is >= num_classes.
Dataset read_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes, Split split = Split::Train);

/// Writes the pair; a ".gz" suffix selects gzip output.
void write_idx(const Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// Whole file, transparently inflated when gzip-compressed.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic corpus

/// Single-channel size x size images, n_per_class per class, labels cycling
/// 0..K-1. Class c is an elongated Gaussian bump centred at a class-specific
/// point on a circle around the image centre and oriented at a
/// class-specific angle, plus seeded jitter and pixel noise.
/// Requires K >= 2 and size >= 8 (PreconditionError otherwise).
Dataset synth_blobs(std::size_t num_classes, std::size_t n_per_class, std::size_t size,
                    std::uint64_t seed, Split split = Split::Train);

// ---------------------------------------------------------------------------
// Augmentation: zero pad, random horizontal flip, random crop.

struct AugmentConfig {
  std::size_t pad = 0;
  /// Output side length; 0 means "same as input".
  std::size_t crop = 0;
  double hflip_prob = 0.0;

  bool enabled() const { return pad != 0 || crop != 0 || hflip_prob != 0.0; }
};

struct AugmentDraw {
  bool flip = false;
  std::size_t dy = 0;
  std::size_t dx = 0;
};

/// Checks crop <= H + 2*pad (and W); throws ConfigError otherwise.
void check_augment(const AugmentConfig& cfg, std::size_t height, std::size_t width);

AugmentDraw draw_augment(const AugmentConfig& cfg, std::size_t height, std::size_t width, Rng& rng);

/// Pads by cfg.pad, mirrors if draw.flip, then crops the crop x crop window
/// at (draw.dy, draw.dx) of the padded image.
std::vector<std::uint8_t> augment_image(std::span<const std::uint8_t> image, std::size_t channels,
                                        std::size_t height, std::size_t width, const AugmentConfig& cfg,
                                        const AugmentDraw& draw);

/// Applies independent random draws to each of `count` consecutive images.
std::vector<std::uint8_t> augment(std::span<const std::uint8_t> images, std::size_t count,
                                  std::size_t channels, std::size_t height, std::size_t width,
                                  const AugmentConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Batching

struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;

  static Normalization unit(std::size_t channels) {
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
  }
};

struct Batch {
  Tensor x;  // B x C x H x W, (v / 255 - mean) / std
  std::vector<int> y;
  std::vector<std::size_t> indices;
};

/// Normalizes raw u8 images of one batch into a tensor.
Tensor to_tensor(std::span<const std::uint8_t> images, std::size_t count, std::size_t channels,
                 std::size_t height, std::size_t width, const Normalization& norm);

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

// Walks a dataset once in a seeded order; the last batch may be short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& ds, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed,
                Normalization norm, AugmentConfig augment = {}, std::uint64_t augment_seed = 0);

  std::optional<Batch> next();
  std::size_t batch_count() const { return (order_.size() + batch_size_ - 1) / batch_size_; }
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  Normalization norm_;
  AugmentConfig augment_;
  Rng augment_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Convenience: every batch of one pass.
std::vector<Batch> batch_iter(const Dataset& ds, std::size_t batch_size,
                              std::optional<std::uint64_t> shuffle_seed, const Normalization& norm);

}  // namespace fixedhead::data
