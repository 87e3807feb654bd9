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
#include "dpwgan/dp_core.hpp"

#include <cstring>

#include <gtest/gtest.h>

#include "dpwgan/errors.hpp"

namespace dpwgan {
namespace {

TEST(ClipL2, Examples) {
  EXPECT_EQ(clip_l2(Vector{3, 4}, ClipSpec(10)), (Vector{3, 4}));
  const Vector c = clip_l2(Vector{3, 4}, ClipSpec(1));
  EXPECT_NEAR(c[0], 0.6, 1e-15);
  EXPECT_NEAR(c[1], 0.8, 1e-15);
  EXPECT_EQ(clip_l2(Vector{0, 0}, ClipSpec(0.5)), (Vector{0, 0}));
}

TEST(ClipL2, RejectsBadBound) {
  EXPECT_THROW(ClipSpec(0.0), ParameterError);
  EXPECT_THROW(ClipSpec(-1.0), ParameterError);
}

// Norm bound, idempotence and direction over random vectors and bounds.
TEST(ClipL2, Properties) {
  RngStream rng(77, 1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    const double scale = std::pow(10.0, 6.0 * rng.uniform() - 3.0);
    Vector g = sample_gaussian(rng, n, 0.0, scale);
    const ClipSpec spec(std::pow(10.0, 4.0 * rng.uniform() - 2.0));
    const Vector once = clip_l2(g, spec);
    EXPECT_LE(l2_norm(once), spec.bound() + 1e-12);
    const Vector twice = clip_l2(once, spec);
    ASSERT_EQ(std::memcmp(once.data(), twice.data(), n * sizeof(double)), 0);
    // once = s * g with 0 < s <= 1.
    const double s = dot(once, g) / dot(g, g);
    EXPECT_GT(s, 0.0);
    EXPECT_LE(s, 1.0 + 1e-15);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(once[i], s * g[i], 1e-12 * std::abs(g[i]) + 1e-300);
    }
  }
}

TEST(CalibrateGaussian, Examples) {
  EXPECT_NEAR(calibrate_sigma_gaussian(PrivacyTarget(1.0, 1e-5), 1.0), 4.844805262605389,
              1e-12);
  EXPECT_EQ(calibrate_sigma_gaussian(PrivacyTarget(1.0, 1e-5), 0.0), 0.0);
  const double one = calibrate_sigma_gaussian(PrivacyTarget(0.5, 1e-5), 1.0);
  EXPECT_DOUBLE_EQ(calibrate_sigma_gaussian(PrivacyTarget(0.5, 1e-5), 2.0), 2.0 * one);
  EXPECT_TRUE(gaussian_regime_holds(PrivacyTarget(0.5, 1e-5)));
  EXPECT_FALSE(gaussian_regime_holds(PrivacyTarget(5.0, 1e-5)));
}

TEST(PrivacyTarget, DeltaDomain) {
  EXPECT_THROW(PrivacyTarget(1.0, 0.0), ParameterError);
  EXPECT_THROW(PrivacyTarget(1.0, 1.0), ParameterError);
  EXPECT_THROW(PrivacyTarget(0.0, 1e-5), ParameterError);
  EXPECT_FALSE(PrivacyTarget::non_private(1e-5).is_private());
}

TEST(CalibrateClosedForm, Examples) {
  EXPECT_NEAR(calibrate_sigma_closed_form(PrivacyTarget(10, 1e-5), 0.01, 5), 0.015174271293851464,
              1e-12);
  EXPECT_EQ(calibrate_sigma_closed_form(PrivacyTarget::non_private(1e-5), 0.01, 5), 0.0);
  EXPECT_DOUBLE_EQ(calibrate_sigma_closed_form(PrivacyTarget(5, 1e-5), 0.01, 5),
                   2.0 * calibrate_sigma_closed_form(PrivacyTarget(10, 1e-5), 0.01, 5));
  EXPECT_THROW(calibrate_sigma_closed_form(PrivacyTarget(10, 1e-5), 0.0, 5), ParameterError);
  EXPECT_THROW(calibrate_sigma_closed_form(PrivacyTarget(10, 1e-5), 1.5, 5), ParameterError);
}

TEST(CalibrateClosedForm, MonotoneOnGrid) {
  const std::vector<double> eps = {0.5, 1, 2, 5, 10, 20};
  const std::vector<double> qs = {0.001, 0.01, 0.1, 0.5, 1.0};
  const std::vector<std::size_t> nds = {1, 2, 5, 10, 50};
  for (double q : qs) {
    for (std::size_t nd : nds) {
      for (std::size_t i = 1; i < eps.size(); ++i) {
        EXPECT_LE(calibrate_sigma_closed_form(PrivacyTarget(eps[i], 1e-5), q, nd),
                  calibrate_sigma_closed_form(PrivacyTarget(eps[i - 1], 1e-5), q, nd));
      }
    }
  }
  for (double e : eps) {
    for (std::size_t nd : nds) {
      for (std::size_t i = 1; i < qs.size(); ++i) {
        EXPECT_GE(calibrate_sigma_closed_form(PrivacyTarget(e, 1e-5), qs[i], nd),
                  calibrate_sigma_closed_form(PrivacyTarget(e, 1e-5), qs[i - 1], nd));
      }
    }
    for (double q : qs) {
      for (std::size_t i = 1; i < nds.size(); ++i) {
        EXPECT_GE(calibrate_sigma_closed_form(PrivacyTarget(e, 1e-5), q, nds[i]),
                  calibrate_sigma_closed_form(PrivacyTarget(e, 1e-5), q, nds[i - 1]));
      }
    }
  }
}

TEST(GaussianMechanism, ZeroNoiseIsIdentity) {
  RngStream rng(5, 5);
  const Vector v = {1.5, -0.0, 3e-300, -7.25};
  for (const auto& spec : {GaussianMechanismSpec(1.0, 0.0), GaussianMechanismSpec(0.0, 3.0)}) {
    const Vector out = gaussian_mechanism(v, spec, rng);
    EXPECT_EQ(std::memcmp(out.data(), v.data(), v.size() * sizeof(double)), 0);
  }
}

TEST(GaussianMechanism, EmpiricalStd) {
  RngStream rng(31337, 2);
  const Vector out = gaussian_mechanism(Vector(10000, 0.0), GaussianMechanismSpec(1.0, 1.0), rng);
  const double m = mean(out);
  double var = 0.0;
  for (double x : out) var += (x - m) * (x - m);
  EXPECT_NEAR(std::sqrt(var / 9999.0), 1.0, 0.03);
}

TEST(GaussianMechanism, ScalesWithSensitivity) {
  RngStream a(8, 1);
  RngStream b(8, 1);
  const Vector x = gaussian_mechanism(Vector(50, 0.0), GaussianMechanismSpec(1.0, 2.0), a);
  const Vector y = gaussian_mechanism(Vector(50, 0.0), GaussianMechanismSpec(3.0, 2.0), b);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(y[i], 3.0 * x[i], 1e-12);
}

}  // namespace
}  // namespace dpwgan
