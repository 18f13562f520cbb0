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


#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "fixedhead/data.hpp"
#include "fixedhead/errors.hpp"
#include "test_util.hpp"

namespace fixedhead::data {
namespace {

using testing::TempDir;

void write_raw(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Two 2x3 images and their labels, byte for byte.
const std::vector<std::uint8_t> kImages = {0x00, 0x00, 0x08, 0x03, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 3,
                                           1,    2,    3,    4,    5, 6, 250, 251, 252, 253, 254, 255};
const std::vector<std::uint8_t> kLabels = {0x00, 0x00, 0x08, 0x01, 0, 0, 0, 2, 7, 1};

TEST(IdxTest, ReadsHandWrittenFiles) {
  TempDir dir;
  write_raw(dir / "img", kImages);
  write_raw(dir / "lab", kLabels);
  const Dataset ds = read_idx(dir / "img", dir / "lab", 10);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.channels, 1u);
  EXPECT_EQ(ds.height, 2u);
  EXPECT_EQ(ds.width, 3u);
  EXPECT_EQ(ds.labels, (std::vector<int>{7, 1}));
  EXPECT_EQ(ds.image(1)[0], 250);
  EXPECT_EQ(ds.image(1)[5], 255);
  EXPECT_EQ(kIdxImagesMagic, 0x00000803u);
}

TEST(IdxTest, WrongMagic) {
  TempDir dir;
  write_raw(dir / "img", kImages);
  write_raw(dir / "lab", kLabels);
  EXPECT_THROW(read_idx(dir / "lab", dir / "lab", 10), FormatError);
  EXPECT_THROW(read_idx(dir / "img", dir / "img", 10), FormatError);
  std::vector<std::uint8_t> floats = kImages;
  floats[2] = 0x0D;
  write_raw(dir / "f", floats);
  EXPECT_THROW(read_idx(dir / "f", dir / "lab", 10), FormatError);
}

TEST(IdxTest, TruncatedPayload) {
  TempDir dir;
  std::vector<std::uint8_t> cut(kImages.begin(), kImages.end() - 1);
  write_raw(dir / "img", cut);
  write_raw(dir / "lab", kLabels);
  EXPECT_THROW(read_idx(dir / "img", dir / "lab", 10), LengthError);
  write_raw(dir / "img", std::vector<std::uint8_t>(kImages.begin(), kImages.begin() + 10));
  EXPECT_THROW(read_idx(dir / "img", dir / "lab", 10), LengthError);
}

TEST(IdxTest, LabelCountAndRange) {
  TempDir dir;
  write_raw(dir / "img", kImages);
  std::vector<std::uint8_t> three = {0, 0, 8, 1, 0, 0, 0, 3, 0, 1, 2};
  write_raw(dir / "lab", three);
  EXPECT_THROW(read_idx(dir / "img", dir / "lab", 10), FormatError);
  std::vector<std::uint8_t> ten = {0, 0, 8, 1, 0, 0, 0, 2, 10, 1};
  write_raw(dir / "lab", ten);
  EXPECT_THROW(read_idx(dir / "img", dir / "lab", 10), LabelError);
  EXPECT_NO_THROW(read_idx(dir / "img", dir / "lab", 11));
}

TEST(IdxTest, RoundTripPlainAndGzip) {
  TempDir dir;
  const Dataset ds = synth_blobs(3, 5, 9, 4);
  write_idx(ds, dir / "a.idx", dir / "b.idx");
  write_idx(ds, dir / "a.idx.gz", dir / "b.idx.gz");
  for (const auto& [img, lab] : {std::pair{"a.idx", "b.idx"}, std::pair{"a.idx.gz", "b.idx.gz"}}) {
    const Dataset back = read_idx(dir / img, dir / lab, 3);
    EXPECT_EQ(back.images, ds.images);
    EXPECT_EQ(back.labels, ds.labels);
    EXPECT_EQ(back.height, 9u);
  }
  const auto gz = [&] {
    std::ifstream in(dir / "a.idx.gz", std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }();
  ASSERT_GE(gz.size(), 2u);
  EXPECT_EQ(gz[0], 0x1f);
  EXPECT_EQ(gz[1], 0x8b);
}

TEST(IdxTest, FourDimensionalImages) {
  TempDir dir;
  Dataset ds;
  ds.channels = 3;
  ds.height = 2;
  ds.width = 2;
  ds.num_classes = 2;
  ds.labels = {0, 1};
  ds.images.resize(2 * 12);
  for (std::size_t i = 0; i < ds.images.size(); ++i) ds.images[i] = static_cast<std::uint8_t>(i);
  write_idx(ds, dir / "i", dir / "l");
  const Dataset back = read_idx(dir / "i", dir / "l", 2);
  EXPECT_EQ(back.channels, 3u);
  EXPECT_EQ(back.images, ds.images);
}

TEST(IdxTest, MnistSizedHeader) {
  TempDir dir;
  Dataset ds;
  ds.height = ds.width = 28;
  ds.num_classes = 10;
  ds.labels.assign(60000, 3);
  ds.images.assign(60000u * 28u * 28u, 0);
  write_idx(ds, dir / "train-images-idx3-ubyte.gz", dir / "train-labels-idx1-ubyte.gz");
  const Dataset back = read_idx(dir / "train-images-idx3-ubyte.gz", dir / "train-labels-idx1-ubyte.gz", 10);
  EXPECT_EQ(back.size(), 60000u);
  EXPECT_EQ(back.channels, 1u);
  EXPECT_EQ(back.height, 28u);
  EXPECT_EQ(back.width, 28u);
}

TEST(IdxTest, RealMnistWhenAvailable) {
  const char* root = std::getenv("FIXEDHEAD_MNIST_DIR");
  if (!root) GTEST_SKIP() << "FIXEDHEAD_MNIST_DIR not set";
  const std::filesystem::path dir(root);
  auto pick = [&](const std::string& stem) {
    return std::filesystem::exists(dir / stem) ? dir / stem : dir / (stem + ".gz");
  };
  const Dataset ds = read_idx(pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"), 10);
  EXPECT_EQ(ds.size(), 60000u);
  EXPECT_EQ(ds.height, 28u);
}

TEST(IdxTest, MissingFile) {
  EXPECT_THROW(read_idx("/nonexistent/a", "/nonexistent/b", 10), IoError);
}

TEST(SynthTest, Deterministic) {
  const Dataset a = synth_blobs(4, 25, 16, 7), b = synth_blobs(4, 25, 16, 7);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(synth_blobs(4, 25, 16, 8).images, a.images);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a.image_size(), 256u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.labels[i], static_cast<int>(i % 4));
}

TEST(SynthTest, Preconditions) {
  EXPECT_THROW(synth_blobs(1, 10, 16, 0), PreconditionError);
  EXPECT_THROW(synth_blobs(3, 10, 7, 0), PreconditionError);
}

TEST(SynthTest, ClassPeaksAreDistinct) {
  const std::size_t k = 10, size = 32;
  const Dataset ds = synth_blobs(k, 40, size, 3);
  std::vector<double> mean_y(k, 0.0), mean_x(k, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto img = ds.image(i);
    const std::size_t p = static_cast<std::size_t>(std::max_element(img.begin(), img.end()) - img.begin());
    mean_y[static_cast<std::size_t>(ds.labels[i])] += static_cast<double>(p / size) / 40.0;
    mean_x[static_cast<std::size_t>(ds.labels[i])] += static_cast<double>(p % size) / 40.0;
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      const double d = std::hypot(mean_y[a] - mean_y[b], mean_x[a] - mean_x[b]);
      EXPECT_GT(d, 1.0) << a << " vs " << b;
    }
}

TEST(AugmentTest, IdentityConfig) {
  const Dataset ds = synth_blobs(2, 2, 8, 1);
  const AugmentConfig cfg{.pad = 0, .crop = 8, .hflip_prob = 0.0};
  Rng rng(1);
  const auto out = augment(ds.images, ds.size(), 1, 8, 8, cfg, rng);
  EXPECT_EQ(out, ds.images);
  EXPECT_FALSE(AugmentConfig{}.enabled());
}

TEST(AugmentTest, PaddedCropOffsetsStayInRange) {
  Rng rng(2);
  const AugmentConfig cfg{.pad = 4, .crop = 32, .hflip_prob = 0.5};
  std::set<std::size_t> seen_dy;
  for (int i = 0; i < 500; ++i) {
    const AugmentDraw d = draw_augment(cfg, 32, 32, rng);
    EXPECT_LE(d.dy, 8u);
    EXPECT_LE(d.dx, 8u);
    seen_dy.insert(d.dy);
  }
  EXPECT_EQ(seen_dy.size(), 9u);
}

TEST(AugmentTest, CropShiftsContent) {
  // 4x4 ramp, pad 1, crop 4 at (0, 0): content moves one pixel down-right.
  std::vector<std::uint8_t> img(16);
  for (std::size_t i = 0; i < 16; ++i) img[i] = static_cast<std::uint8_t>(i + 1);
  const AugmentConfig cfg{.pad = 1, .crop = 4, .hflip_prob = 0.0};
  const auto out = augment_image(img, 1, 4, 4, cfg, {.flip = false, .dy = 0, .dx = 0});
  EXPECT_EQ(out[0], 0);
  EXPECT_EQ(out[5], 1);
  EXPECT_EQ(out[15], 11);
  const auto centred = augment_image(img, 1, 4, 4, cfg, {.flip = false, .dy = 1, .dx = 1});
  EXPECT_EQ(centred, img);
}

TEST(AugmentTest, FlipTwiceIsIdentity) {
  const Dataset ds = synth_blobs(2, 1, 10, 5);
  const AugmentConfig cfg{.pad = 0, .crop = 10, .hflip_prob = 1.0};
  const AugmentDraw d{.flip = true, .dy = 0, .dx = 0};
  const auto once = augment_image(ds.image(0), 1, 10, 10, cfg, d);
  EXPECT_NE(once, std::vector<std::uint8_t>(ds.image(0).begin(), ds.image(0).end()));
  EXPECT_EQ(once[0], ds.image(0)[9]);
  const auto twice = augment_image(once, 1, 10, 10, cfg, d);
  EXPECT_EQ(twice, std::vector<std::uint8_t>(ds.image(0).begin(), ds.image(0).end()));
}

TEST(AugmentTest, CropLargerThanPaddedImage) {
  EXPECT_THROW(check_augment({.pad = 1, .crop = 11, .hflip_prob = 0}, 8, 8), ConfigError);
  EXPECT_NO_THROW(check_augment({.pad = 1, .crop = 10, .hflip_prob = 0}, 8, 8));
  EXPECT_THROW(check_augment({.pad = 0, .crop = 0, .hflip_prob = 1.5}, 8, 8), ConfigError);
}

TEST(BatchTest, SizesAndCoverage) {
  const Dataset ds = synth_blobs(2, 5, 8, 0);
  const auto batches = batch_iter(ds, 4, 99, Normalization::unit(1));
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].y.size(), 4u);
  EXPECT_EQ(batches[1].y.size(), 4u);
  EXPECT_EQ(batches[2].y.size(), 2u);
  EXPECT_EQ(batches[2].x.shape(), (Shape{2, 1, 8, 8}));
  std::vector<std::size_t> all;
  for (const Batch& b : batches) all.insert(all.end(), b.indices.begin(), b.indices.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
  for (const Batch& b : batches)
    for (std::size_t i = 0; i < b.y.size(); ++i) EXPECT_EQ(b.y[i], ds.labels[b.indices[i]]);
}

TEST(BatchTest, SeededOrder) {
  const Dataset ds = synth_blobs(3, 10, 8, 0);
  EXPECT_EQ(BatchIterator(ds, 5, 1, Normalization::unit(1)).order(), BatchIterator(ds, 5, 1, Normalization::unit(1)).order());
  EXPECT_NE(BatchIterator(ds, 5, 1, Normalization::unit(1)).order(), BatchIterator(ds, 5, 2, Normalization::unit(1)).order());
  const auto unshuffled = BatchIterator(ds, 5, std::nullopt, Normalization::unit(1)).order();
  for (std::size_t i = 0; i < unshuffled.size(); ++i) EXPECT_EQ(unshuffled[i], i);
  EXPECT_EQ(BatchIterator(ds, 7, 1, Normalization::unit(1)).batch_count(), 5u);
  EXPECT_THROW(BatchIterator(ds, 0, 1, Normalization::unit(1)), PreconditionError);
}

TEST(BatchTest, Normalization) {
  const Dataset ds = synth_blobs(2, 3, 8, 0);
  for (const Batch& b : batch_iter(ds, 4, std::nullopt, Normalization::unit(1))) {
    for (double v : b.x.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const Normalization norm{{0.5}, {0.25}};
  const Batch b = batch_iter(ds, 6, std::nullopt, norm)[0];
  EXPECT_DOUBLE_EQ(b.x[0], (ds.images[0] / 255.0 - 0.5) / 0.25);
  EXPECT_THROW(batch_iter(ds, 2, std::nullopt, Normalization::unit(3)), ConfigError);
}

TEST(BatchTest, DisabledAugmentationMatchesEvaluationPipeline) {
  const Dataset ds = synth_blobs(2, 4, 8, 0);
  BatchIterator train(ds, 3, std::nullopt, Normalization::unit(1), AugmentConfig{}, 17);
  BatchIterator eval(ds, 3, std::nullopt, Normalization::unit(1));
  while (auto a = train.next()) {
    auto b = eval.next();
    ASSERT_TRUE(b);
    EXPECT_TRUE(bit_identical(a->x, b->x));
  }
}

TEST(BatchTest, AugmentationKeepsLabelsAndShape) {
  const Dataset ds = synth_blobs(2, 4, 8, 0);
  BatchIterator it(ds, 3, 5, Normalization::unit(1), {.pad = 2, .crop = 6, .hflip_prob = 0.5}, 9);
  while (auto b = it.next()) {
    EXPECT_EQ(b->x.dim(2), 6u);
    EXPECT_EQ(b->x.dim(3), 6u);
    for (std::size_t i = 0; i < b->y.size(); ++i) EXPECT_EQ(b->y[i], ds.labels[b->indices[i]]);
  }
}

TEST(DatasetTest, Validate) {
  Dataset ds = synth_blobs(2, 2, 8, 0);
  EXPECT_NO_THROW(ds.validate());
  ds.labels[1] = 2;
  EXPECT_THROW(ds.validate(), LabelError);
  ds.labels[1] = 1;
  ds.images.pop_back();
  EXPECT_THROW(ds.validate(), ShapeError);
}

}  // namespace
}  // namespace fixedhead::data
