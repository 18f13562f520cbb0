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

#include <cmath>

#include "fixedhead/errors.hpp"
#include "fixedhead/ops.hpp"
#include "test_util.hpp"

namespace fixedhead {
namespace {

using testing::random_tensor;

TEST(MatmulTest, IdentityAndArithmetic) {
  Tape tape;
  Var i2 = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var a = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  EXPECT_TRUE(bit_identical(matmul(i2, a).value(), a.value()));
  Var r = tape.constant(Tensor::matrix({{1, 1}}));
  Var c = tape.constant(Tensor::matrix({{1}, {1}}));
  const Tensor y = matmul(r, c).value();
  EXPECT_EQ(y.shape(), (Shape{1, 1}));
  EXPECT_EQ(y[0], 2.0);
}

TEST(MatmulTest, InnerDimensionMismatch) {
  Tape tape;
  Var a = tape.constant(Tensor::zeros({2, 3}));
  Var b = tape.constant(Tensor::zeros({2, 3}));
  EXPECT_THROW(matmul(a, b), ShapeError);
}

TEST(MatmulTest, BackwardRules) {
  Tape tape;
  Var a = tape.variable(Tensor::matrix({{1, 2}, {3, 4}}));
  Var b = tape.variable(Tensor::matrix({{5, 6}, {7, 8}}));
  tape.backward(sum(matmul(a, b)));
  // dA = 1 * B^T row sums, dB = A^T * 1.
  EXPECT_EQ(a.grad()[0], 11.0);
  EXPECT_EQ(a.grad()[1], 15.0);
  EXPECT_EQ(a.grad()[2], 11.0);
  EXPECT_EQ(b.grad()[0], 4.0);
  EXPECT_EQ(b.grad()[3], 6.0);
}

TEST(ElementwiseTest, ReluAndAdd) {
  Tape tape;
  const Tensor r = relu(tape.constant(Tensor::vector({-1, 0, 2}))).value();
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_EQ(r[2], 2.0);

  const Tensor x = random_tensor({3, 4}, 1);
  EXPECT_TRUE(bit_identical(add(tape.constant(x), tape.constant(Tensor::zeros({3, 4}))).value(), x));
  EXPECT_THROW(add(tape.constant(Tensor::zeros({2})), tape.constant(Tensor::zeros({3}))), ShapeError);
}

TEST(ElementwiseTest, ReluGradientIsZeroAtAndBelowZero) {
  Tape tape;
  Var x = tape.variable(Tensor::vector({-1, 0, 2}));
  tape.backward(sum(relu(x)));
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 0.0);
  EXPECT_EQ(x.grad()[2], 1.0);
}

TEST(ElementwiseTest, AddBiasBroadcastsOverRows) {
  Tape tape;
  Var x = tape.variable(Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
  Var b = tape.variable(Tensor::vector({10, 20}));
  Var y = add_bias(x, b);
  EXPECT_EQ(y.value().at(2, 1), 26.0);
  tape.backward(sum(y));
  EXPECT_EQ(b.grad()[0], 3.0);
  EXPECT_THROW(add_bias(x, tape.constant(Tensor::vector({1, 2, 3}))), ShapeError);
}

TEST(Conv2dTest, SumOfOnes) {
  Tape tape;
  const Tensor y = conv2d(tape.constant(Tensor::full({1, 1, 3, 3}, 1.0)), tape.constant(Tensor::full({1, 1, 3, 3}, 1.0)),
                          std::nullopt)
                       .value();
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 9.0);
}

TEST(Conv2dTest, StemGeometry) {
  EXPECT_EQ(conv_output_size(224, 7, 2, 3), 112u);
  Tape tape;
  Var x = tape.constant(Tensor::zeros({1, 3, 32, 32}));
  Var w = tape.constant(Tensor::zeros({8, 3, 7, 7}));
  EXPECT_EQ(conv2d(x, w, std::nullopt, {.stride = 2, .padding = 3}).shape(), (Shape{1, 8, 16, 16}));
}

// Reference convolution written directly from the definition.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride, std::size_t pad,
                  std::size_t groups) {
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t ho = (h + 2 * pad - kh) / stride + 1, wo = (wd + 2 * pad - kw) / stride + 1;
  const std::size_t cin_g = cin / groups, cout_g = cout / groups;
  Tensor y({n, cout, ho, wo});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < ho; ++i)
        for (std::size_t j = 0; j < wo; ++j) {
          double s = bias ? (*bias)[co] : 0.0;
          const std::size_t g = co / cout_g;
          for (std::size_t ci = 0; ci < cin_g; ++ci)
            for (std::size_t a = 0; a < kh; ++a)
              for (std::size_t c = 0; c < kw; ++c) {
                const long yy = static_cast<long>(i * stride + a) - static_cast<long>(pad);
                const long xx = static_cast<long>(j * stride + c) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
                s += x.at(b, g * cin_g + ci, yy, xx) * w.at(co, ci, a, c);
              }
          y.at(b, co, i, j) = s;
        }
  return y;
}

TEST(Conv2dTest, MatchesDirectDefinitionOnRandomGeometries) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t groups = 1 + rng.below(3);
    const std::size_t cin = groups * (1 + rng.below(3));
    const std::size_t cout = groups * (1 + rng.below(3));
    const std::size_t k = 1 + rng.below(4);
    const std::size_t stride = 1 + rng.below(3);
    const std::size_t pad = rng.below(3);
    const std::size_t h = std::max<std::size_t>(k, 1 + rng.below(9));
    const std::size_t w = std::max<std::size_t>(k, 1 + rng.below(9));
    const Tensor x = random_tensor({2, cin, h, w}, 100 + trial);
    const Tensor wt = random_tensor({cout, cin / groups, k, k}, 200 + trial);
    const Tensor b = random_tensor({cout}, 300 + trial);
    Tape tape;
    const Tensor y = conv2d(tape.constant(x), tape.constant(wt), tape.constant(b),
                            {.stride = stride, .padding = pad, .groups = groups})
                         .value();
    const Tensor ref = naive_conv(x, wt, &b, stride, pad, groups);
    ASSERT_EQ(y.shape(), ref.shape());
    EXPECT_EQ(y.dim(2), conv_output_size(h, k, stride, pad));
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-12) << "trial " << trial;
  }
}

TEST(Conv2dTest, OutputSizeFormulaProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.below(7), s = 1 + rng.below(4), p = rng.below(4);
    const std::size_t h = std::max<std::size_t>(k, 1 + rng.below(40));
    const std::size_t expected = static_cast<std::size_t>(
        std::floor((static_cast<double>(h) + 2.0 * static_cast<double>(p) - static_cast<double>(k)) /
                   static_cast<double>(s))) + 1;
    EXPECT_EQ(conv_output_size(h, k, s, p), expected);
  }
}

TEST(Conv2dTest, DepthwiseChannelsAreIndependent) {
  const std::size_t c = 4;
  Tensor x = random_tensor({1, c, 6, 6}, 1);
  const Tensor w = random_tensor({c, 1, 3, 3}, 2);
  Tape tape;
  const Tensor y0 = conv2d(tape.constant(x), tape.constant(w), std::nullopt, {.padding = 1, .groups = c}).value();
  for (std::size_t i = 0; i < 36; ++i) x[i] += 1.0 + static_cast<double>(i);
  const Tensor y1 = conv2d(tape.constant(x), tape.constant(w), std::nullopt, {.padding = 1, .groups = c}).value();
  const std::size_t plane = 36;
  bool channel0_changed = false;
  for (std::size_t i = 0; i < plane; ++i) channel0_changed = channel0_changed || y0[i] != y1[i];
  EXPECT_TRUE(channel0_changed);
  for (std::size_t i = plane; i < y0.size(); ++i) ASSERT_EQ(y0[i], y1[i]);
}

TEST(Conv2dTest, ShapeViolations) {
  Tape tape;
  Var x = tape.constant(Tensor::zeros({1, 3, 5, 5}));
  EXPECT_THROW(conv2d(x, tape.constant(Tensor::zeros({4, 1, 3, 3})), std::nullopt, {.groups = 2}), ShapeError);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor::zeros({4, 2, 3, 3})), std::nullopt), ShapeError);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor::zeros({4, 3, 7, 7})), std::nullopt), ShapeError);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor::zeros({4, 3, 3, 3})), tape.constant(Tensor::zeros({3}))), ShapeError);
}

TEST(BatchNormTest, TwoPointNormalization) {
  Tape tape;
  BatchNormBuffers buf(1);
  Var x = tape.constant(Tensor({2, 1, 1, 1}, {1.0, 3.0}));
  const double gamma = 1.5, beta = 0.25;
  const Tensor y = batchnorm2d(x, tape.constant(Tensor::vector({gamma})), tape.constant(Tensor::vector({beta})), buf,
                               Mode::Train)
                       .value();
  const double s = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(y[0], -s * gamma + beta, 1e-15);
  EXPECT_NEAR(y[1], s * gamma + beta, 1e-15);
  // Running stats move 10% toward the batch mean (2) and unbiased variance (2).
  EXPECT_NEAR(buf.running_mean[0], 0.2, 1e-15);
  EXPECT_NEAR(buf.running_var[0], 0.9 + 0.1 * 2.0, 1e-15);
}

TEST(BatchNormTest, InferenceWithUnitStatistics) {
  Tape tape;
  BatchNormBuffers buf(2);
  const Tensor x = random_tensor({3, 2, 2, 2}, 8);
  const Tensor y = batchnorm2d(tape.constant(x), tape.constant(Tensor::full({2}, 1.0)), tape.constant(Tensor::zeros({2})),
                               buf, Mode::Infer)
                       .value();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i] / std::sqrt(1.0 + 1e-5), 1e-15);
  EXPECT_EQ(buf.running_mean[0], 0.0);
}

TEST(BatchNormTest, SingleValuePerChannelIsDegenerateInTraining) {
  Tape tape;
  BatchNormBuffers buf(2);
  Var x = tape.constant(Tensor::zeros({1, 2, 1, 1}));
  Var g = tape.constant(Tensor::full({2}, 1.0));
  Var b = tape.constant(Tensor::zeros({2}));
  EXPECT_THROW(batchnorm2d(x, g, b, buf, Mode::Train), DegenerateStatisticsError);
  EXPECT_NO_THROW(batchnorm2d(x, g, b, buf, Mode::Infer));
}

TEST(GlobalAvgPoolTest, MeanOfMap) {
  Tape tape;
  const Tensor y = global_avg_pool(tape.constant(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}))).value();
  EXPECT_EQ(y.shape(), (Shape{1, 1}));
  EXPECT_EQ(y[0], 2.5);

  const Tensor x = random_tensor({2, 3, 1, 1}, 4);
  const Tensor z = global_avg_pool(tape.constant(x)).value();
  EXPECT_EQ(z.shape(), (Shape{2, 3}));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(z[i], x[i]);
}

TEST(GlobalAvgPoolTest, BackwardSpreadsUniformly) {
  Tape tape;
  Var x = tape.variable(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  tape.backward(sum(global_avg_pool(x)));
  for (double g : x.grad()) EXPECT_EQ(g, 0.25);
}

TEST(GlobalAvgPoolTest, Linearity) {
  const Tensor x = random_tensor({2, 3, 4, 5}, 9);
  Tensor ax = x;
  const double a = -2.75;
  for (double& v : ax.data()) v *= a;
  Tape tape;
  const Tensor p = global_avg_pool(tape.constant(x)).value();
  const Tensor q = global_avg_pool(tape.constant(ax)).value();
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(q[i], a * p[i], 1e-12);
}

TEST(SoftmaxCrossEntropyTest, UniformAndExtremeLogits) {
  Tape tape;
  const int t0[] = {0};
  EXPECT_NEAR(softmax_cross_entropy(tape.constant(Tensor::matrix({{0, 0}})), t0).value()[0], std::log(2.0), 1e-15);
  const double big = softmax_cross_entropy(tape.constant(Tensor::matrix({{1000, 0}})), t0).value()[0];
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 0.0, 1e-12);
  const int t1[] = {1};
  EXPECT_NEAR(softmax_cross_entropy(tape.constant(Tensor::matrix({{1000, 0}})), t1).value()[0], 1000.0, 1e-9);
}

TEST(SoftmaxCrossEntropyTest, LabelsAreChecked) {
  Tape tape;
  Var logits = tape.constant(Tensor::zeros({2, 3}));
  const int bad[] = {0, 3};
  EXPECT_THROW(softmax_cross_entropy(logits, bad), LabelError);
  const int negative[] = {-1, 0};
  EXPECT_THROW(softmax_cross_entropy(logits, negative), LabelError);
  const int short_list[] = {0};
  EXPECT_THROW(softmax_cross_entropy(logits, short_list), ShapeError);
}

TEST(SoftmaxCrossEntropyTest, GradientIsSoftmaxMinusOneHotOverN) {
  Tape tape;
  Var logits = tape.variable(Tensor::matrix({{1, 2, 3}, {0, 0, 0}}));
  const int targets[] = {2, 0};
  tape.backward(softmax_cross_entropy(logits, targets));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(logits.grad()[2], (std::exp(3.0) / z - 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(logits.grad()[0], (std::exp(1.0) / z) / 2.0, 1e-15);
  EXPECT_NEAR(logits.grad()[3], (1.0 / 3.0 - 1.0) / 2.0, 1e-15);
}

TEST(SpatialMeanTest, LeftToRightSum) {
  const double v[] = {1.0, 2.0, 4.0, 8.0};
  EXPECT_EQ(spatial_mean(v), 3.75);
}

}  // namespace
}  // namespace fixedhead
