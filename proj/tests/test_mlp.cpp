// Copyright 2026 The dpwgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "dpwgan/mlp.hpp"

#include <cstring>

#include <gtest/gtest.h>

#include "dpwgan/errors.hpp"
#include "oracles.hpp"

namespace dpwgan {
namespace {

Matrix random_batch(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = 2.0 * rng.uniform() - 1.0;
  return m;
}

MlpShape small_shape() {
  return MlpShape{{3, 4, 2}, {Activation::kTanh, Activation::kLinear}};
}

TEST(Forward, IdentityLayer) {
  const MlpParams net({Layer{Matrix::identity(3), Vector(3, 0.0), Activation::kLinear}});
  const Matrix x = Matrix::from_rows({{1, -2, 3}, {0.5, 0, -1}});
  EXPECT_EQ(forward(net, x), x);
}

TEST(Forward, ReluKillsNegativePreActivation) {
  const MlpParams net({Layer{Matrix::from_rows({{-1}}), Vector{0}, Activation::kRelu}});
  EXPECT_EQ(forward(net, Matrix::from_rows({{2}})), Matrix::from_rows({{0}}));
}

TEST(Forward, MatchesReferenceEvaluator) {
  RngStream rng(17, 2);
  const MlpParams net = init_mlp(
      MlpShape{{5, 6, 3}, {Activation::kRelu, Activation::kTanh}}, rng);
  const Matrix x = random_batch(8, 5, rng);
  const Matrix y = forward(net, x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vector ref = oracle::reference_forward_row(net, x.row(i));
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(y(i, k), ref[k], 1e-12);
  }
  const Matrix again = forward(net, x);
  EXPECT_EQ(std::memcmp(y.data().data(), again.data().data(), y.size() * sizeof(double)), 0);
}

TEST(Forward, ShapeMismatchThrows) {
  RngStream rng(1, 1);
  const MlpParams net = init_mlp(small_shape(), rng);
  EXPECT_THROW(forward(net, Matrix(2, 4)), ShapeError);
  EXPECT_THROW(MlpParams({Layer{Matrix(2, 3), Vector(3), Activation::kRelu},
                          Layer{Matrix(2, 1), Vector(1), Activation::kLinear}}),
               ShapeError);
}

TEST(BackwardPerExample, ZeroUpstreamGivesZero) {
  RngStream rng(3, 3);
  const MlpParams net = init_mlp(small_shape(), rng);
  const Matrix x = random_batch(4, 3, rng);
  const auto grads = backward_per_example(net, x, Matrix(4, 2));
  ASSERT_EQ(grads.per_example.size(), 4u);
  for (const auto& g : grads.per_example) {
    ASSERT_EQ(g.size(), net.parameter_count());
    for (double v : g) EXPECT_EQ(v, 0.0);
  }
}

TEST(BackwardPerExample, ScalarLinearHandDerivative) {
  const MlpParams net({Layer{Matrix::from_rows({{0.7}}), Vector{-0.2}, Activation::kLinear}});
  const auto grads =
      backward_per_example(net, Matrix::from_rows({{1.5}}), Matrix::from_rows({{1}}));
  EXPECT_EQ(grads.per_example[0], (Vector{1.5, 1.0}));
}

TEST(BackwardPerExample, UpstreamRowMismatchThrows) {
  RngStream rng(1, 1);
  const MlpParams net = init_mlp(small_shape(), rng);
  EXPECT_THROW(backward_per_example(net, Matrix(3, 3), Matrix(2, 2)), ShapeError);
}

TEST(BackwardPerExample, MatchesFiniteDifferences) {
  RngStream rng(23, 4);
  const MlpParams net = init_mlp(
      MlpShape{{3, 5, 2, 1}, {Activation::kTanh, Activation::kRelu, Activation::kLinear}},
      rng);
  ASSERT_LE(net.parameter_count(), 50u);
  Matrix x = random_batch(3, 3, rng);
  const Matrix up = random_batch(3, 1, rng);
  const auto grads = backward_per_example(net, x, up);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (oracle::min_relu_margin(net, x.row(i)) < 1e-3) continue;
    const Vector fd = oracle::finite_difference_gradient(net, x.row(i), up.row(i), 1e-5);
    for (std::size_t p = 0; p < fd.size(); ++p) {
      EXPECT_LT(oracle::relative_error(grads.per_example[i][p], fd[p]), 1e-5)
          << "example " << i << " param " << p;
    }
  }
}

TEST(BackwardBatch, SumOfPerExampleMatchesBatchGradient) {
  RngStream rng(8, 8);
  const MlpParams net = init_mlp(
      MlpShape{{4, 7, 3}, {Activation::kRelu, Activation::kTanh}}, rng);
  const Matrix x = random_batch(6, 4, rng);
  const Matrix up = random_batch(6, 3, rng);
  const auto per = backward_per_example(net, x, up);
  const auto batch = backward_batch(net, x, up);
  Vector sum(net.parameter_count(), 0.0);
  for (const auto& g : per.per_example) {
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += g[p];
  }
  const double scale = l2_norm(batch.params);
  for (std::size_t p = 0; p < sum.size(); ++p) {
    EXPECT_NEAR(sum[p], batch.params[p], 1e-10 * scale);
  }
}

TEST(BackwardBatch, InputGradientMatchesFiniteDifferences) {
  RngStream rng(12, 1);
  const MlpParams net = init_mlp(
      MlpShape{{3, 4, 1}, {Activation::kTanh, Activation::kLinear}}, rng);
  const Matrix x = random_batch(2, 3, rng);
  const Matrix up = Matrix::from_rows({{1.0}, {-0.5}});
  const auto grads = backward_batch(net, x, up);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      Vector xp(x.row(i).begin(), x.row(i).end());
      Vector xm = xp;
      xp[j] += h;
      xm[j] -= h;
      const double fd = up(i, 0) *
                        (oracle::reference_forward_row(net, xp)[0] -
                         oracle::reference_forward_row(net, xm)[0]) /
                        (2 * h);
      EXPECT_NEAR(grads.inputs(i, j), fd, 1e-8);
    }
  }
}

TEST(Flatten, DocumentedOrder) {
  const MlpParams net({Layer{Matrix::from_rows({{1, 2}, {3, 4}}), Vector{5, 6},
                             Activation::kLinear}});
  EXPECT_EQ(flatten(net).values, (Vector{1, 2, 3, 4, 5, 6}));
}

TEST(Flatten, RoundTripAndLength) {
  RngStream rng(4, 4);
  const MlpShape shape{{6, 5, 4, 2},
                       {Activation::kRelu, Activation::kTanh, Activation::kLinear}};
  const MlpParams net = init_mlp(shape, rng);
  const FlatView flat = flatten(net);
  EXPECT_EQ(flat.values.size(), 6u * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
  EXPECT_EQ(flat.values.size(), shape.parameter_count());
  EXPECT_EQ(unflatten(flat, shape), net);
  FlatView short_flat = flat;
  short_flat.values.pop_back();
  EXPECT_THROW(unflatten(short_flat, shape), ShapeError);
}

TEST(Init, UniformWithinFanInBound) {
  RngStream a(9, 1);
  RngStream b(9, 1);
  const MlpShape shape{{16, 8, 1}, {Activation::kRelu, Activation::kLinear}};
  const MlpParams na = init_mlp(shape, a);
  EXPECT_EQ(na, init_mlp(shape, b));
  for (double w : na.layers()[0].weight.data()) EXPECT_LE(std::abs(w), 0.25);
  for (double w : na.layers()[1].weight.data()) {
    EXPECT_LE(std::abs(w), 1.0 / std::sqrt(8.0));
  }
}

TEST(Params, ClampAndAddScaled) {
  RngStream rng(2, 2);
  MlpParams net = init_mlp(small_shape(), rng);
  clamp_parameters(net, 0.1);
  EXPECT_LE(max_abs_parameter(net), 0.1);
  const FlatView before = flatten(net);
  const Vector ones(net.parameter_count(), 1.0);
  add_scaled(net, ones, 0.5);
  const FlatView after = flatten(net);
  for (std::size_t p = 0; p < ones.size(); ++p) {
    EXPECT_EQ(after.values[p], before.values[p] + 0.5);
  }
}

}  // namespace
}  // namespace dpwgan
