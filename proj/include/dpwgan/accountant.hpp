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
// Moments accountant.
//
// For a mechanism M and neighbouring datasets d, d', the privacy loss at an
// outcome o is c(o) = log(P[M(d) = o] / P[M(d') = o]). The accountant tracks
// beta(lambda) = log E_{o ~ M(d)}[exp(lambda * c(o))], maximised over
// neighbouring pairs, on a fixed grid of orders lambda. Adaptive composition
// adds the per-step values, and the tail bound
//
//   epsilon(delta) = min_lambda (beta(lambda) + ln(1 / delta)) / lambda
//
// turns the accumulated moments into an (epsilon, delta) guarantee.
//
// The continuous mechanism is the sub-sampled Gaussian with sensitivity
// normalised to 1: each record is used with probability q and the released
// sum carries N(0, sigma^2) noise. With mu0 = N(0, sigma^2), mu1 = N(1,
// sigma^2) and mu = (1 - q) mu0 + q mu1, one step has
//
//   beta(lambda) = max( log E_mu[(mu / mu0)^lambda],
//                       log E_mu0[(mu0 / mu)^lambda] ),
//
// evaluated here by Gauss-Kronrod quadrature in log space.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dpwgan {

class MechanismStep {
 public:
  // q in (0, 1], sigma > 0 (multiplier of the sensitivity).
  MechanismStep(double q, double sigma);
  double q() const { return q_; }
  double sigma() const { return sigma_; }

 private:
  double q_;
  double sigma_;
};

// One log-moment. Unbounded values (a distinguishing outcome exists) are a
// flag, never a floating-point infinity.
class MomentValue {
 public:
  static MomentValue finite(double v) { return MomentValue(false, v); }
  static MomentValue unbounded() { return MomentValue(true, 0.0); }
  bool is_unbounded() const { return unbounded_; }
  // Only meaningful when !is_unbounded().
  double value() const { return value_; }

 private:
  MomentValue(bool unbounded, double v) : unbounded_(unbounded), value_(v) {}
  bool unbounded_;
  double value_;
};

std::vector<double> default_lambda_grid();  // 1, 2, ..., 32

class MomentLedger {
 public:
  explicit MomentLedger(std::vector<double> lambda_grid = default_lambda_grid());

  const std::vector<double>& lambda_grid() const { return lambda_grid_; }
  const std::vector<double>& beta() const { return beta_; }
  std::uint64_t steps() const { return steps_; }
  // True once any composed step had unbounded loss; epsilon is then infinite.
  bool unbounded() const { return unbounded_; }

  // beta += times * moments (one value per grid point); steps += times.
  // Throws ParameterError on times == 0 or a length mismatch.
  void add(std::span<const MomentValue> moments, std::uint64_t times);

  std::string serialize() const;
  // Inverse of serialize(). Throws FormatError.
  static MomentLedger parse(const std::string& text);

  friend bool operator==(const MomentLedger&, const MomentLedger&) = default;

 private:
  std::vector<double> lambda_grid_;
  std::vector<double> beta_;
  std::uint64_t steps_ = 0;
  bool unbounded_ = false;
};

// Absolute tolerance on the scaled quadrature; larger estimated error throws
// NumericError.
inline constexpr double kQuadratureTolerance = 1e-10;

double log_mgf_subsampled_gaussian(const MechanismStep& step, double lambda);

// Per-step moments on `grid`.
std::vector<MomentValue> step_moments(const MechanismStep& step,
                                      std::span<const double> grid);

// Returns a copy with `times` compositions of `step` added.
MomentLedger accumulate(MomentLedger ledger, const MechanismStep& step,
                        std::uint64_t times);

// Infinite epsilon when the ledger is unbounded.
double eps_for_delta(const MomentLedger& ledger, double delta);

// Capped at 1.
double delta_for_eps(const MomentLedger& ledger, double epsilon);

// Advanced composition baseline: sqrt(2 T ln(1/delta)) eps0 +
// T eps0 (e^eps0 - 1).
double strong_composition_epsilon(double eps_per_step, std::uint64_t steps,
                                  double delta);

// Baseline for the sub-sampled Gaussian over `steps` steps: the classic
// Gaussian bound eps0 = sqrt(2 ln(1.25 / delta0)) / sigma, amplified by
// sampling to ln(1 + q (e^eps0 - 1)), then strong composition. Half of
// `delta` covers the per-step slack (steps * q * delta0) and half the
// composition slack.
double strong_composition_baseline(double q, double sigma, std::uint64_t steps,
                                   double delta);

// Smallest sigma (relative precision 1e-9) such that `steps` compositions of
// MechanismStep(q, sigma) spend at most `epsilon` at `delta`. nullopt when no
// sigma up to 1e4 suffices, which happens whenever epsilon sits below
// ln(1/delta) / max(grid).
std::optional<double> calibrate_sigma_accountant(
    double q, std::uint64_t steps, double epsilon, double delta,
    std::span<const double> grid);

// --- Discrete mechanisms --------------------------------------------------

// Output distributions of a mechanism on one fixed neighbouring pair.
class DiscreteMechanism {
 public:
  // Tables must have equal length, entries >= 0, each summing to 1 (1e-12).
  DiscreteMechanism(std::vector<double> prob_d, std::vector<double> prob_d_prime);

  // Randomized response reporting the true bit with probability p.
  static DiscreteMechanism randomized_response(double p);

  std::size_t outcome_count() const { return prob_d_.size(); }
  const std::vector<double>& prob_d() const { return prob_d_; }
  const std::vector<double>& prob_d_prime() const { return prob_d_prime_; }

  // Same mechanism with d and d' exchanged.
  DiscreteMechanism swapped() const;

 private:
  std::vector<double> prob_d_;
  std::vector<double> prob_d_prime_;
};

struct PrivacyLoss {
  bool infinite = false;  // P[d'] == 0 < P[d]
  double value = 0.0;     // log-ratio; -inf when P[d] == 0 < P[d']
};

// Throws ParameterError for an out-of-range outcome or one impossible under
// both datasets.
PrivacyLoss privacy_loss(const DiscreteMechanism& mech, std::size_t outcome);

// log E_{o ~ d}[exp(lambda c(o))] by enumeration over the outcomes.
MomentValue log_mgf_discrete(const DiscreteMechanism& mech, double lambda);

// max over both orderings of the pair, per grid point.
std::vector<MomentValue> discrete_moments(const DiscreteMechanism& mech,
                                          std::span<const double> grid);

}  // namespace dpwgan
