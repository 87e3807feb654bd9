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

#include <string>

#include "dpwgan/errors.hpp"

namespace dpwgan {

ClipSpec::ClipSpec(double bound) : bound_(bound) {
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw ParameterError("clip bound must be finite and > 0, got " +
                         std::to_string(bound));
  }
}

GaussianMechanismSpec::GaussianMechanismSpec(double sensitivity, double sigma)
    : sensitivity_(sensitivity), sigma_(sigma) {
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    throw ParameterError("sensitivity must be finite and >= 0");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("sigma must be finite and >= 0");
  }
}

PrivacyTarget::PrivacyTarget(double epsilon, double delta)
    : epsilon_(epsilon), delta_(delta) {
  if (!(epsilon > 0.0)) {
    throw ParameterError("epsilon must be > 0, got " + std::to_string(epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("delta must lie in (0, 1), got " +
                         std::to_string(delta));
  }
}

Vector clip_l2(std::span<const double> g, const ClipSpec& spec) {
  Vector out(g.begin(), g.end());
  const double norm = l2_norm(g);
  if (!std::isfinite(norm)) throw NumericError("clip_l2: non-finite gradient norm");
  if (norm <= spec.bound()) return out;
  // Rounding in the recomputed norm can overshoot the bound by a few ulps for
  // long vectors; shrink by a doubling relative step until it holds.
  double scale = spec.bound() / norm;
  double step = 64.0 * std::numeric_limits<double>::epsilon();
  while (true) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * scale;
    if (l2_norm(out) <= spec.bound()) return out;
    scale = std::min(std::nextafter(scale, 0.0), scale * (1.0 - step));
    step *= 2.0;
  }
}

double calibrate_sigma_gaussian(const PrivacyTarget& target, double sensitivity) {
  if (!(sensitivity >= 0.0)) throw ParameterError("sensitivity must be >= 0");
  if (!target.is_private()) return 0.0;
  return std::sqrt(2.0 * std::log(1.25 / target.delta())) * sensitivity /
         target.epsilon();
}

bool gaussian_regime_holds(const PrivacyTarget& target) {
  return target.epsilon() < 1.0;
}

double calibrate_sigma_closed_form(const PrivacyTarget& target, double q,
                            std::size_t critic_iters) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw ParameterError("sampling probability q must lie in (0, 1], got " +
                         std::to_string(q));
  }
  if (critic_iters < 1) throw ParameterError("critic iterations must be >= 1");
  if (!target.is_private()) return 0.0;
  return 2.0 * q *
         std::sqrt(static_cast<double>(critic_iters) *
                   std::log(1.0 / target.delta())) /
         target.epsilon();
}

Vector gaussian_mechanism(std::span<const double> value,
                          const GaussianMechanismSpec& spec, RngStream& rng) {
  const double std = spec.noise_std();
  Vector noise = sample_gaussian(rng, value.size(), 0.0, std);
  Vector out(value.begin(), value.end());
  if (std == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise[i];
  return out;
}

}  // namespace dpwgan
