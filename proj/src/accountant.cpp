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
#include "dpwgan/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dpwgan/errors.hpp"
#include "dpwgan/text_io.hpp"

namespace dpwgan {

MechanismStep::MechanismStep(double q, double sigma) : q_(q), sigma_(sigma) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw ParameterError("sampling probability must lie in (0, 1], got " +
                         format_double(q));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("noise multiplier must be finite and > 0, got " +
                         format_double(sigma));
  }
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int l = 1; l <= 32; ++l) grid.push_back(l);
  return grid;
}

MomentLedger::MomentLedger(std::vector<double> lambda_grid)
    : lambda_grid_(std::move(lambda_grid)), beta_(lambda_grid_.size(), 0.0) {
  if (lambda_grid_.empty()) throw ParameterError("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid_.size(); ++i) {
    if (!(lambda_grid_[i] > 0.0) || !std::isfinite(lambda_grid_[i]) ||
        (i > 0 && !(lambda_grid_[i] > lambda_grid_[i - 1]))) {
      throw ParameterError("lambda grid must be positive and ascending");
    }
  }
}

void MomentLedger::add(std::span<const MomentValue> moments,
                       std::uint64_t times) {
  if (times == 0) throw ParameterError("accumulate: times must be >= 1");
  if (moments.size() != lambda_grid_.size()) {
    throw ParameterError("accumulate: moment count does not match the grid");
  }
  const double t = static_cast<double>(times);
  for (std::size_t i = 0; i < moments.size(); ++i) {
    if (moments[i].is_unbounded()) {
      unbounded_ = true;
    } else {
      beta_[i] += t * moments[i].value();
    }
  }
  steps_ += times;
}

std::string MomentLedger::serialize() const {
  std::ostringstream out;
  out << "ledger_version = 1\n";
  out << "steps = " << steps_ << "\n";
  out << "unbounded = " << (unbounded_ ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < lambda_grid_.size(); ++i) {
    out << "moment = " << format_double(lambda_grid_[i]) << " "
        << format_double(beta_[i]) << "\n";
  }
  return out.str();
}

MomentLedger MomentLedger::parse(const std::string& text) {
  std::vector<double> grid;
  std::vector<double> beta;
  std::uint64_t steps = 0;
  bool unbounded = false;
  bool saw_version = false;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("ledger: expected 'key = value', got '" +
                        std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "ledger_version") {
      if (parse_uint(value) != 1) throw FormatError("ledger: unsupported version");
      saw_version = true;
    } else if (key == "steps") {
      steps = parse_uint(value);
    } else if (key == "unbounded") {
      unbounded = parse_uint(value) != 0;
    } else if (key == "moment") {
      const auto sp = value.find(' ');
      if (sp == std::string_view::npos) throw FormatError("ledger: bad moment line");
      grid.push_back(parse_double(value.substr(0, sp)));
      beta.push_back(parse_double(value.substr(sp + 1)));
    } else {
      throw FormatError("ledger: unknown key '" + std::string(key) + "'");
    }
  }
  if (!saw_version) throw FormatError("ledger: missing ledger_version");
  MomentLedger ledger(std::move(grid));
  ledger.beta_ = std::move(beta);
  ledger.steps_ = steps;
  ledger.unbounded_ = unbounded;
  return ledger;
}

namespace {

// log(mu(z) / mu0(z)) = log(1 + q (exp(t) - 1)), t = (2z - 1) / (2 sigma^2).
double log_mixture_ratio(double z, double q, double sigma) {
  const double t = (2.0 * z - 1.0) / (2.0 * sigma * sigma);
  if (q == 1.0) return t;
  if (t <= 0.0) return std::log1p(q * std::expm1(t));
  return t + std::log(q + (1.0 - q) * std::exp(-t));
}

double log_gauss0(double z, double sigma) {
  return -z * z / (2.0 * sigma * sigma) -
         std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
}

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // |kronrod - gauss|, summed over accepted panels
};

// Bisects until the 7/15-point Gauss-Kronrod gap on a panel is below `tol`
// or the depth budget runs out; unresolved gaps stay in the reported error.
// The tolerance is absolute: the library's own adaptive driver only takes a
// relative one, which keeps refining tail panels whose mass is negligible.
template <typename F>
void adaptive_kronrod(const F& f, double a, double b, double tol, int depth,
                      QuadResult& out) {
  double gap = 0.0;
  const double k = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 0, 0.0, &gap);
  gap *= 0.5 * (b - a);  // the estimate is for the panel mapped onto [-1, 1]
  if (gap <= tol || depth == 0) {
    out.value += k;
    out.error += gap;
    return;
  }
  const double mid = 0.5 * (a + b);
  adaptive_kronrod(f, a, mid, 0.5 * tol, depth - 1, out);
  adaptive_kronrod(f, mid, b, 0.5 * tol, depth - 1, out);
}

// log of the integral of exp(log_f) over [lo, hi]. The range is cut into
// panels of half a standard deviation and the integrand is rescaled by its
// sampled maximum so nothing overflows; the tolerance applies to the
// rescaled integral.
template <typename LogF>
double log_integral(LogF log_f, double lo, double hi, double sigma,
                    const char* direction, const MechanismStep& step,
                    double lambda) {
  const double width = 0.5 * sigma;
  const auto panels =
      static_cast<std::size_t>(std::ceil((hi - lo) / width));
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p <= 4 * panels; ++p) {
    const double z = lo + (hi - lo) * static_cast<double>(p) /
                              static_cast<double>(4 * panels);
    peak = std::max(peak, log_f(z));
  }
  const auto scaled = [&](double z) { return std::exp(log_f(z) - peak); };
  const double panel_tol = 0.1 * kQuadratureTolerance / static_cast<double>(panels);
  QuadResult result;
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + (hi - lo) * static_cast<double>(p) /
                              static_cast<double>(panels);
    const double b = lo + (hi - lo) * static_cast<double>(p + 1) /
                              static_cast<double>(panels);
    adaptive_kronrod(scaled, a, b, panel_tol, 12, result);
  }
  const double value = result.value;
  const double error = result.error;
  if (!(value > 0.0) || !std::isfinite(value) || error > kQuadratureTolerance) {
    throw NumericError(
        std::string("subsampled Gaussian quadrature did not converge (") +
        direction + " direction, q=" + format_double(step.q()) +
        ", sigma=" + format_double(step.sigma()) + ", lambda=" +
        format_double(lambda) + ", integral=" + format_double(value) +
        ", error estimate=" + format_double(error) + ")");
  }
  return peak + std::log(value);
}

}  // namespace

double log_mgf_subsampled_gaussian(const MechanismStep& step, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("lambda must be finite and > 0");
  }
  const double q = step.q();
  const double sigma = step.sigma();
  // Both integrands are Gaussian-shaped with width sigma; their modes lie in
  // [-lambda, lambda + 1].
  const double lo = -(lambda + 1.0) - 25.0 * sigma;
  const double hi = (lambda + 2.0) + 25.0 * sigma;

  // E_mu[(mu/mu0)^lambda] = int mu0 (mu/mu0)^(lambda+1)
  const double log_a = log_integral(
      [&](double z) {
        return log_gauss0(z, sigma) + (lambda + 1.0) * log_mixture_ratio(z, q, sigma);
      },
      lo, hi, sigma, "mixture-vs-base", step, lambda);
  // E_mu0[(mu0/mu)^lambda] = int mu0 (mu/mu0)^(-lambda)
  const double log_b = log_integral(
      [&](double z) {
        return log_gauss0(z, sigma) - lambda * log_mixture_ratio(z, q, sigma);
      },
      lo, hi, sigma, "base-vs-mixture", step, lambda);
  return std::max({log_a, log_b, 0.0});
}

std::vector<MomentValue> step_moments(const MechanismStep& step,
                                      std::span<const double> grid) {
  std::vector<MomentValue> out;
  out.reserve(grid.size());
  for (double lambda : grid) {
    out.push_back(MomentValue::finite(log_mgf_subsampled_gaussian(step, lambda)));
  }
  return out;
}

MomentLedger accumulate(MomentLedger ledger, const MechanismStep& step,
                        std::uint64_t times) {
  if (times == 0) throw ParameterError("accumulate: times must be >= 1");
  const auto moments = step_moments(step, ledger.lambda_grid());
  ledger.add(moments, times);
  return ledger;
}

double eps_for_delta(const MomentLedger& ledger, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("delta must lie in (0, 1), got " + format_double(delta));
  }
  if (ledger.unbounded()) return std::numeric_limits<double>::infinity();
  const double log_inv_delta = std::log(1.0 / delta);
  double best = std::numeric_limits<double>::infinity();
  const auto& grid = ledger.lambda_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    best = std::min(best, (ledger.beta()[i] + log_inv_delta) / grid[i]);
  }
  return best;
}

double delta_for_eps(const MomentLedger& ledger, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw ParameterError("epsilon must be > 0, got " + format_double(epsilon));
  }
  if (ledger.unbounded()) return 1.0;
  double best = 1.0;
  const auto& grid = ledger.lambda_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    best = std::min(best, std::exp(ledger.beta()[i] - grid[i] * epsilon));
  }
  return best;
}

double strong_composition_epsilon(double eps_per_step, std::uint64_t steps,
                                  double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  const double t = static_cast<double>(steps);
  return std::sqrt(2.0 * t * std::log(1.0 / delta)) * eps_per_step +
         t * eps_per_step * std::expm1(eps_per_step);
}

double strong_composition_baseline(double q, double sigma, std::uint64_t steps,
                                   double delta) {
  const MechanismStep step(q, sigma);
  if (steps == 0) return 0.0;
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  const double t = static_cast<double>(steps);
  const double delta0 = 0.5 * delta / (t * q);
  const double eps0 = std::sqrt(2.0 * std::log(1.25 / delta0)) / sigma;
  const double eps_step = std::log1p(q * std::expm1(eps0));
  return strong_composition_epsilon(eps_step, steps, 0.5 * delta);
}

std::optional<double> calibrate_sigma_accountant(
    double q, std::uint64_t steps, double epsilon, double delta,
    std::span<const double> grid) {
  if (steps == 0) throw ParameterError("calibration needs at least one step");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
  const std::vector<double> grid_copy(grid.begin(), grid.end());
  const auto spent = [&](double sigma) {
    return eps_for_delta(accumulate(MomentLedger(grid_copy),
                                    MechanismStep(q, sigma), steps),
                         delta);
  };
  constexpr double kMaxSigma = 1e4;
  double hi = 1.0;
  while (spent(hi) > epsilon) {
    hi *= 2.0;
    if (hi > kMaxSigma) return std::nullopt;
  }
  double lo = hi / 2.0;
  while (spent(lo) <= epsilon) {
    hi = lo;
    lo /= 2.0;
    if (lo < 1e-3) return hi;
  }
  // Invariant: spent(lo) > epsilon >= spent(hi).
  while ((hi - lo) > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (spent(mid) <= epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

DiscreteMechanism::DiscreteMechanism(std::vector<double> prob_d,
                                     std::vector<double> prob_d_prime)
    : prob_d_(std::move(prob_d)), prob_d_prime_(std::move(prob_d_prime)) {
  if (prob_d_.size() != prob_d_prime_.size() || prob_d_.empty()) {
    throw ParameterError("probability tables must be nonempty and equal length");
  }
  for (const auto* table : {&prob_d_, &prob_d_prime_}) {
    double sum = 0.0;
    for (double p : *table) {
      if (!(p >= 0.0)) throw ParameterError("probabilities must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ParameterError("probability table sums to " + format_double(sum));
    }
  }
}

DiscreteMechanism DiscreteMechanism::randomized_response(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must lie in [0, 1]");
  // Outcome 0 reports the bit held by d, outcome 1 the one held by d'.
  return DiscreteMechanism({p, 1.0 - p}, {1.0 - p, p});
}

DiscreteMechanism DiscreteMechanism::swapped() const {
  return DiscreteMechanism(prob_d_prime_, prob_d_);
}

PrivacyLoss privacy_loss(const DiscreteMechanism& mech, std::size_t outcome) {
  if (outcome >= mech.outcome_count()) {
    throw ParameterError("outcome index out of range");
  }
  const double pd = mech.prob_d()[outcome];
  const double pdp = mech.prob_d_prime()[outcome];
  if (pd == 0.0 && pdp == 0.0) {
    throw ParameterError("outcome has probability zero under both datasets");
  }
  if (pdp == 0.0) return PrivacyLoss{true, 0.0};
  if (pd == 0.0) return PrivacyLoss{false, -std::numeric_limits<double>::infinity()};
  return PrivacyLoss{false, std::log(pd / pdp)};
}

MomentValue log_mgf_discrete(const DiscreteMechanism& mech, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be > 0");
  std::vector<double> log_terms;
  for (std::size_t o = 0; o < mech.outcome_count(); ++o) {
    const double pd = mech.prob_d()[o];
    if (pd == 0.0) continue;
    const PrivacyLoss loss = privacy_loss(mech, o);
    if (loss.infinite) return MomentValue::unbounded();
    log_terms.push_back(std::log(pd) + lambda * loss.value);
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  double sum = 0.0;
  for (double t : log_terms) sum += std::exp(t - peak);
  return MomentValue::finite(peak + std::log(sum));
}

std::vector<MomentValue> discrete_moments(const DiscreteMechanism& mech,
                                          std::span<const double> grid) {
  const DiscreteMechanism other = mech.swapped();
  std::vector<MomentValue> out;
  for (double lambda : grid) {
    const MomentValue a = log_mgf_discrete(mech, lambda);
    const MomentValue b = log_mgf_discrete(other, lambda);
    if (a.is_unbounded() || b.is_unbounded()) {
      out.push_back(MomentValue::unbounded());
    } else {
      out.push_back(MomentValue::finite(std::max(a.value(), b.value())));
    }
  }
  return out;
}

}  // namespace dpwgan
