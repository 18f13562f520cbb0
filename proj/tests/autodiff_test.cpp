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

#include "fixedhead/autodiff.hpp"
#include "fixedhead/errors.hpp"
#include "fixedhead/ops.hpp"

namespace fixedhead {
namespace {

TEST(TapeTest, SumGradientIsOnes) {
  Tape tape;
  Var x = tape.variable(Tensor::vector({1, 2, 3}));
  tape.backward(sum(x));
  const auto g = x.grad();
  ASSERT_EQ(g.size(), 3u);
  for (double v : g) EXPECT_EQ(v, 1.0);
}

TEST(TapeTest, FanOutAccumulates) {
  Tape tape;
  Var x = tape.variable(Tensor::vector({1, -2, 0.5}));
  tape.backward(sum(add(x, x)));
  for (double v : x.grad()) EXPECT_EQ(v, 2.0);
}

TEST(TapeTest, NonScalarLossIsRejected) {
  Tape tape;
  Var x = tape.variable(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(relu(x)), ContractError);
}

TEST(TapeTest, ConstantsRecordNoNodes) {
  Tape tape;
  Var a = tape.constant(Tensor::vector({1, 2}));
  Var b = tape.constant(Tensor::vector({3, 4}));
  Var c = add(a, b);
  EXPECT_FALSE(c.requires_grad());
  EXPECT_EQ(tape.node_count(), 0u);
  EXPECT_TRUE(c.grad().empty());
  Var x = tape.variable(Tensor::vector({1, 1}));
  Var d = add(c, x);
  EXPECT_TRUE(d.requires_grad());
  EXPECT_EQ(tape.node_count(), 1u);
}

TEST(TapeTest, OperandsFromAnotherTapeAreRejected) {
  Tape t1, t2;
  Var a = t1.variable(Tensor::vector({1}));
  Var b = t2.variable(Tensor::vector({1}));
  EXPECT_THROW(add(a, b), ContractError);
}

TEST(TapeTest, RepeatedBackwardDoesNotDoubleCount) {
  Tape tape;
  Var x = tape.variable(Tensor::vector({3}));
  Var loss = sum(mul(x, x));
  tape.backward(loss);
  tape.backward(loss);
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(TapeTest, TrainableParameterReceivesGradient) {
  Parameter w("w", Tensor::vector({2, 3}));
  Tape tape;
  tape.backward(sum(mul(tape.param(w), tape.constant(Tensor::vector({5, 7})))));
  ASSERT_TRUE(w.value.has_grad());
  EXPECT_EQ(w.value.grad()[0], 5.0);
  EXPECT_EQ(w.value.grad()[1], 7.0);
}

TEST(TapeTest, FixedParameterEntersAsConstant) {
  Parameter w("w", Tensor::vector({2, 3}), false);
  Tape tape;
  Var v = tape.param(w);
  EXPECT_FALSE(v.requires_grad());
  Var x = tape.variable(Tensor::vector({1, 1}));
  tape.backward(sum(mul(v, x)));
  EXPECT_FALSE(w.value.has_grad());
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(TapeTest, ParameterUsedTwiceAccumulatesAcrossBindings) {
  Parameter w("w", Tensor::vector({1.5}));
  Tape tape;
  Var a = tape.param(w);
  Var b = tape.param(w);
  tape.backward(sum(add(a, mul(b, b))));
  EXPECT_DOUBLE_EQ(w.value.grad()[0], 1.0 + 3.0);
}

TEST(TapeTest, NodesAreVisitedInReverseCreationOrder) {
  // y = relu(x) * x; loss = sum(y). d/dx = 2x for x > 0, 0 otherwise.
  Tape tape;
  Var x = tape.variable(Tensor::vector({-1.0, 2.0}));
  tape.backward(sum(mul(relu(x), x)));
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 4.0);
  EXPECT_EQ(tape.node_count(), 3u);
}

TEST(TapeTest, ValueReferencesSurviveLaterRecords) {
  Tape tape;
  Var a = tape.constant(Tensor::vector({1.0, 2.0}));
  const Tensor& ref = a.value();
  for (int i = 0; i < 1000; ++i) tape.constant(Tensor::vector({0.0}));
  EXPECT_EQ(&ref, &a.value());
  EXPECT_EQ(ref[1], 2.0);
}

}  // namespace
}  // namespace fixedhead
