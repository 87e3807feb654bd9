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
//
// Gaussian-mechanism building blocks: L2 clipping, noise addition and the two
// closed-form noise calibrations.
#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "dpwgan/ndnum.hpp"

namespace dpwgan {

// L2 clip bound C.
class ClipSpec {
 public:
  // Throws ParameterError unless bound is finite and > 0.
  explicit ClipSpec(double bound);
  double bound() const { return bound_; }

 private:
  double bound_;
};

class GaussianMechanismSpec {
 public:
  // Both values must be finite and >= 0.
  GaussianMechanismSpec(double sensitivity, double sigma);
  double sensitivity() const { return sensitivity_; }
  double sigma() const { return sigma_; }
  // Standard deviation of the added noise, sigma * sensitivity.
  double noise_std() const { return sigma_ * sensitivity_; }

 private:
  double sensitivity_;
  double sigma_;
};

inline constexpr double kNonPrivate = std::numeric_limits<double>::infinity();

// (epsilon, delta) target. epsilon == kNonPrivate is the non-private case.
class PrivacyTarget {
 public:
  PrivacyTarget(double epsilon, double delta);
  static PrivacyTarget non_private(double delta) {
    return PrivacyTarget(kNonPrivate, delta);
  }
  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  bool is_private() const { return std::isfinite(epsilon_); }

 private:
  double epsilon_;
  double delta_;
};

// g * min(1, C / ||g||). Vectors already inside the ball, including the zero
// vector, are returned unchanged. The scale is nudged down until the
// recomputed norm is <= C, which makes the operation idempotent. NumericError
// when the norm is not finite.
Vector clip_l2(std::span<const double> g, const ClipSpec& spec);

// sqrt(2 ln(1.25 / delta)) * sensitivity / epsilon. This is an infimum: any
// usable sigma must be strictly larger. The underlying argument assumes
// epsilon < 1; larger values are accepted, see gaussian_regime_holds().
double calibrate_sigma_gaussian(const PrivacyTarget& target, double sensitivity);
bool gaussian_regime_holds(const PrivacyTarget& target);

// Training-loop closed form 2 q sqrt(n_d ln(1 / delta)) / epsilon, natural
// log. Returns 0 for the non-private target.
double calibrate_sigma_closed_form(const PrivacyTarget& target, double q,
                            std::size_t critic_iters);

// value + N(0, (sigma * sensitivity)^2) per coordinate. A zero noise std
// returns `value` bit-for-bit and still advances the stream as for a draw.
Vector gaussian_mechanism(std::span<const double> value,
                          const GaussianMechanismSpec& spec, RngStream& rng);

}  // namespace dpwgan
