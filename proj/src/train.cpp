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
#include "dpwgan/train.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "dpwgan/binary_io.hpp"
#include "dpwgan/text_io.hpp"

namespace dpwgan {

namespace {

constexpr std::uint64_t kTrainStream = 1;

// Children of the run stream.
enum : std::uint64_t {
  kInitCritic = 0,
  kInitGenerator = 1,
  kSampling = 2,
  kLatent = 3,
  kNoise = 4,
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void TrainConfig::validate() const {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(positive(alpha_d), "alpha_d must be > 0");
  require(positive(alpha_g), "alpha_g must be > 0");
  require(positive(weight_clip), "weight_clip must be > 0");
  require(positive(grad_clip), "grad_clip must be > 0");
  require(batch > 0, "batch must be >= 1");
  require(critic_iters > 0, "critic_iters must be >= 1");
  require(gen_iters > 0, "gen_iters must be >= 1");
  require(latent_dim > 0, "latent_dim must be >= 1");
  require(hidden > 0, "hidden must be >= 1");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(std::isfinite(noise_scale) && noise_scale >= 0.0,
          "noise_scale must be finite and >= 0");
  require(epsilon_target == kNonPrivate || positive(epsilon_target),
          "epsilon_target must be > 0 or inf");
  if (is_private()) {
    require(noise_scale > 0.0, "a finite epsilon_target needs noise_scale > 0");
  } else {
    require(noise_scale == 0.0, "epsilon_target = inf needs noise_scale = 0");
  }
}

std::string TrainConfig::canonical_text() const {
  std::string s;
  const auto put = [&](const char* key, const std::string& value) {
    s += key;
    s += " = ";
    s += value;
    s += '\n';
  };
  put("alpha_d", format_double(alpha_d));
  put("alpha_g", format_double(alpha_g));
  put("weight_clip", format_double(weight_clip));
  put("grad_clip", format_double(grad_clip));
  put("batch", std::to_string(batch));
  put("critic_iters", std::to_string(critic_iters));
  put("gen_iters", std::to_string(gen_iters));
  put("noise_scale", format_double(noise_scale));
  put("latent_dim", std::to_string(latent_dim));
  put("hidden", std::to_string(hidden));
  put("seed", std::to_string(seed));
  put("delta", format_double(delta));
  put("epsilon", format_double(epsilon_target));
  return s;
}

std::uint64_t TrainConfig::trajectory_hash() const {
  TrainConfig c = *this;
  c.gen_iters = 1;
  return fnv1a64(c.canonical_text());
}

MlpShape generator_shape(const TrainConfig& config, std::size_t data_dim) {
  return {{config.latent_dim, config.hidden, data_dim},
          {Activation::kRelu, Activation::kTanh}};
}

MlpShape critic_shape(const TrainConfig& config, std::size_t data_dim) {
  return {{data_dim, config.hidden, 1}, {Activation::kRelu, Activation::kLinear}};
}

TrainStreams TrainStreams::from_seed(std::uint64_t seed) {
  const RngStream run(seed, kTrainStream);
  return {run.child(kSampling), run.child(kLatent), run.child(kNoise)};
}

MlpParams initial_generator(const TrainConfig& config, std::size_t data_dim) {
  RngStream rng = RngStream(config.seed, kTrainStream).child(kInitGenerator);
  return init_mlp(generator_shape(config, data_dim), rng);
}

MlpParams initial_critic(const TrainConfig& config, std::size_t data_dim) {
  RngStream rng = RngStream(config.seed, kTrainStream).child(kInitCritic);
  MlpParams omega = init_mlp(critic_shape(config, data_dim), rng);
  clamp_parameters(omega, config.weight_clip);
  return omega;
}

double wgan_critic_objective(std::span<const double> d_real,
                             std::span<const double> d_fake) {
  if (d_real.size() != d_fake.size()) {
    throw ShapeError("wgan_critic_objective: " + std::to_string(d_real.size()) +
                     " real vs " + std::to_string(d_fake.size()) + " fake outputs");
  }
  if (d_real.empty()) return 0.0;
  return mean(d_real) - mean(d_fake);
}

std::vector<Vector> per_example_critic_gradients(const MlpParams& omega,
                                                 const Matrix& real,
                                                 const Matrix& fake) {
  if (real.rows() != fake.rows()) {
    throw ShapeError("per_example_critic_gradients: unpaired batch");
  }
  const Matrix ones = [&] {
    Matrix m(real.rows(), 1);
    for (double& v : m.data()) v = 1.0;
    return m;
  }();
  auto g = backward_per_example(omega, real, ones).per_example;
  const auto f = backward_per_example(omega, fake, ones).per_example;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t k = 0; k < g[i].size(); ++k) g[i][k] -= f[i][k];
  }
  return g;
}

Vector clipped_sum(std::span<const Vector> grads, const ClipSpec& clip) {
  if (grads.empty()) return {};
  Vector sum(grads.front().size(), 0.0);
  for (const auto& g : grads) {
    if (g.size() != sum.size()) throw ShapeError("clipped_sum: ragged gradients");
    const Vector c = clip_l2(g, clip);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += c[k];
  }
  return sum;
}

BudgetExceeded::BudgetExceeded(double epsilon_after, double target)
    : Error("privacy budget exhausted: next step would reach epsilon " +
            format_double(epsilon_after) + " > target " + format_double(target)),
      epsilon_after_(epsilon_after) {}

StepAccounting StepAccounting::make(double q, double sigma,
                                    std::span<const double> grid) {
  StepAccounting acc{q, sigma, {}};
  if (sigma > 0.0) {
    const std::vector<double> lambdas =
        grid.empty() ? default_lambda_grid() : std::vector<double>(grid.begin(), grid.end());
    acc.moments = step_moments(MechanismStep(q, sigma), lambdas);
  }
  return acc;
}

namespace {

Matrix draw_latent(RngStream& rng, std::size_t rows, std::size_t dim) {
  Matrix z(rows, dim);
  const Vector v = sample_gaussian(rng, rows * dim, 0.0, 1.0);
  std::copy(v.begin(), v.end(), z.data().begin());
  return z;
}

struct CriticGradient {
  Vector clipped_sum;
  double critic_loss = 0.0;
  double mean_norm = 0.0;
};

// Forward pass, per-example gradients and their clipped sum.
CriticGradient critic_gradient(const MlpParams& omega, const MlpParams& theta,
                               const Matrix& real_batch, RngStream& latent,
                               const TrainConfig& config) {
  const std::size_t b = real_batch.rows();
  const Matrix fake = forward(theta, draw_latent(latent, b, config.latent_dim));
  CriticGradient out;
  if (b == 0) {
    out.clipped_sum.assign(omega.parameter_count(), 0.0);
    return out;
  }
  const Matrix d_real = forward(omega, real_batch);
  const Matrix d_fake = forward(omega, fake);
  out.critic_loss = wgan_critic_objective(d_real.data(), d_fake.data());
  const auto grads = per_example_critic_gradients(omega, real_batch, fake);
  double norm_sum = 0.0;
  for (const auto& g : grads) norm_sum += l2_norm(g);
  out.mean_norm = norm_sum / static_cast<double>(b);
  out.clipped_sum = clipped_sum(grads, ClipSpec(config.grad_clip));
  return out;
}

// Ascent with the averaged aggregate, then the weight clip.
MlpParams apply_critic_update(const MlpParams& omega, const Vector& aggregate,
                              const TrainConfig& config) {
  Vector g = aggregate;
  const double m = static_cast<double>(config.batch);
  for (double& v : g) v /= m;
  MlpParams next = omega;
  add_scaled(next, g, config.alpha_d);
  clamp_parameters(next, config.weight_clip);
  return next;
}

}  // namespace

CriticStepResult dp_critic_step(const MlpParams& omega, const MlpParams& theta,
                                const Matrix& real_batch, RngStream& latent,
                                RngStream& noise, const TrainConfig& config,
                                const MomentLedger& ledger,
                                const StepAccounting& accounting) {
  if (accounting.sigma != config.noise_scale) {
    throw ParameterError("dp_critic_step: accounting sigma differs from config");
  }
  MomentLedger next_ledger = ledger;
  double eps = kNonPrivate;
  if (!accounting.moments.empty()) {
    next_ledger.add(accounting.moments, 1);
    eps = eps_for_delta(next_ledger, config.delta);
    if (eps > config.epsilon_target) {
      throw BudgetExceeded(eps, config.epsilon_target);
    }
  }
  const CriticGradient grad =
      critic_gradient(omega, theta, real_batch, latent, config);
  const Vector noised = gaussian_mechanism(
      grad.clipped_sum, GaussianMechanismSpec(config.grad_clip, config.noise_scale),
      noise);
  CriticStepResult result{apply_critic_update(omega, noised, config),
                          std::move(next_ledger), {}};
  result.metrics.critic_loss = grad.critic_loss;
  result.metrics.grad_norm_pre_clip = grad.mean_norm;
  result.metrics.eps_spent = eps;
  return result;
}

CriticStepResult reference_critic_step(const MlpParams& omega,
                                       const MlpParams& theta,
                                       const Matrix& real_batch,
                                       RngStream& latent,
                                       const TrainConfig& config) {
  const CriticGradient grad =
      critic_gradient(omega, theta, real_batch, latent, config);
  CriticStepResult result{apply_critic_update(omega, grad.clipped_sum, config),
                          MomentLedger(), {}};
  result.metrics.critic_loss = grad.critic_loss;
  result.metrics.grad_norm_pre_clip = grad.mean_norm;
  result.metrics.eps_spent = kNonPrivate;
  return result;
}

GeneratorStepResult generator_step(const MlpParams& theta, const MlpParams& omega,
                                   RngStream& rng, const TrainConfig& config) {
  const std::size_t m = config.batch;
  const Matrix z = draw_latent(rng, m, config.latent_dim);
  const Matrix fake = forward(theta, z);
  const Matrix d_fake = forward(omega, fake);
  Matrix upstream(m, 1);
  for (double& v : upstream.data()) v = -1.0 / static_cast<double>(m);
  const BatchGrads through_critic = backward_batch(omega, fake, upstream);
  Vector g = backward_batch(theta, z, through_critic.inputs).params;

  GeneratorStepResult result{theta, {}};
  result.metrics.gen_loss = -mean(d_fake.data());
  result.metrics.grad_norm_pre_clip = l2_norm(g);
  g = clip_l2(g, ClipSpec(config.grad_clip));
  add_scaled(result.theta, g, -config.alpha_g);
  return result;
}

std::vector<std::size_t> poisson_sample(std::size_t n, double q, RngStream& rng) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < q) picked.push_back(i);
  }
  return picked;
}

// --- Checkpoint -----------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'D', 'P', 'W', 'G', 'A', 'N', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(ckpt.config_hash);
  w.u64(ckpt.iteration);
  write_mlp(w, ckpt.theta);
  write_mlp(w, ckpt.omega);
  const std::string ledger = ckpt.ledger.serialize();
  w.u64(ledger.size());
  w.bytes(ledger.data(), ledger.size());
  w.u64(ckpt.streams.sampling.seed());
  for (const RngStream* s : {&ckpt.streams.sampling, &ckpt.streams.latent,
                             &ckpt.streams.noise}) {
    w.u64(s->stream_id());
    w.u64(s->counter());
  }
  return w.take();
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "checkpoint");
  if (r.str(sizeof kCheckpointMagic) !=
      std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw FormatError("checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_hash = r.u64();
  ckpt.iteration = r.u64();
  ckpt.theta = read_mlp(r);
  ckpt.omega = read_mlp(r);
  ckpt.ledger = MomentLedger::parse(r.str(r.u64()));
  const std::uint64_t seed = r.u64();
  for (RngStream* s : {&ckpt.streams.sampling, &ckpt.streams.latent,
                       &ckpt.streams.noise}) {
    const std::uint64_t id = r.u64();
    const std::uint64_t counter = r.u64();
    *s = RngStream(seed, id, counter);
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return ckpt;
}

// --- Training loop --------------------------------------------------------

namespace {

enum class CriticKind { kPrivate, kReference };

double ledger_epsilon(const TrainConfig& config, const MomentLedger& ledger) {
  if (!config.is_private()) return kNonPrivate;
  return eps_for_delta(ledger, config.delta);
}

bool finite_metrics(const StepMetrics& m) {
  return std::isfinite(m.critic_loss) && std::isfinite(m.gen_loss) &&
         std::isfinite(m.grad_norm_pre_clip);
}

TrainResult run_loop(const TrainConfig& config, const Matrix& data,
                     const std::optional<Checkpoint>& resume,
                     const TrainHooks& hooks, CriticKind kind) {
  config.validate();
  if (data.rows() == 0) throw ValidationError("train: empty dataset");
  const std::size_t n = data.rows();
  const double q = std::min(1.0, static_cast<double>(config.batch) /
                                     static_cast<double>(n));

  TrainResult result;
  Checkpoint& state = result.checkpoint;
  if (resume) {
    if (resume->config_hash != config.trajectory_hash()) {
      throw ConfigError("checkpoint was written by a different configuration");
    }
    if (resume->theta.shape() != generator_shape(config, data.cols()) ||
        resume->omega.shape() != critic_shape(config, data.cols())) {
      throw ConfigError("checkpoint architecture does not match the dataset");
    }
    state = *resume;
  } else {
    state.theta = initial_generator(config, data.cols());
    state.omega = initial_critic(config, data.cols());
    state.streams = TrainStreams::from_seed(config.seed);
    state.config_hash = config.trajectory_hash();
  }

  const StepAccounting accounting =
      kind == CriticKind::kPrivate
          ? StepAccounting::make(q, config.noise_scale, state.ledger.lambda_grid())
          : StepAccounting{q, 0.0, {}};

  const auto finish = [&](TrainStatus status, std::string message) {
    result.status = status;
    result.message = std::move(message);
    result.epsilon = ledger_epsilon(config, state.ledger);
    return std::move(result);
  };

  while (state.iteration < config.gen_iters) {
    Checkpoint next = state;
    StepMetrics metrics;
    metrics.iteration = state.iteration + 1;
    try {
      for (std::size_t t = 0; t < config.critic_iters; ++t) {
        const auto picked = poisson_sample(n, q, next.streams.sampling);
        const Matrix batch = gather_rows(data, picked);
        CriticStepResult step =
            kind == CriticKind::kPrivate
                ? dp_critic_step(next.omega, next.theta, batch, next.streams.latent,
                                 next.streams.noise, config, next.ledger, accounting)
                : reference_critic_step(next.omega, next.theta, batch,
                                        next.streams.latent, config);
        next.omega = std::move(step.omega);
        if (kind == CriticKind::kPrivate) next.ledger = std::move(step.ledger);
        metrics.critic_loss = step.metrics.critic_loss;
        metrics.grad_norm_pre_clip = step.metrics.grad_norm_pre_clip;
      }
      GeneratorStepResult gen =
          generator_step(next.theta, next.omega, next.streams.latent, config);
      next.theta = std::move(gen.theta);
      metrics.gen_loss = gen.metrics.gen_loss;
    } catch (const BudgetExceeded& e) {
      // Partial critic steps of this iteration are discarded with `next`.
      return finish(TrainStatus::kBudgetHalt, e.what());
    } catch (const NumericError& e) {
      return finish(TrainStatus::kNumericAbort,
                    "iteration " + std::to_string(metrics.iteration) + ": " + e.what());
    }
    next.iteration = metrics.iteration;
    metrics.eps_spent = ledger_epsilon(config, next.ledger);

    if (!finite_metrics(metrics) || !next.theta.all_finite() ||
        !next.omega.all_finite()) {
      state = std::move(next);
      result.metrics.push_back(metrics);
      return finish(TrainStatus::kNumericAbort,
                    "non-finite loss or parameters at iteration " +
                        std::to_string(metrics.iteration));
    }
    state = std::move(next);
    result.metrics.push_back(metrics);
    if (hooks.on_iteration) hooks.on_iteration(metrics);
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 &&
        state.iteration % hooks.checkpoint_every == 0) {
      hooks.on_checkpoint(state);
    }
  }
  return finish(TrainStatus::kCompleted, "completed");
}

}  // namespace

TrainResult train(const TrainConfig& config, const Matrix& data,
                  const std::optional<Checkpoint>& resume, const TrainHooks& hooks) {
  return run_loop(config, data, resume, hooks, CriticKind::kPrivate);
}

TrainResult train_reference(const TrainConfig& config, const Matrix& data) {
  return run_loop(config, data, std::nullopt, {}, CriticKind::kReference);
}

Matrix sample_generator(const MlpParams& theta, std::size_t n, RngStream& rng) {
  return forward(theta, draw_latent(rng, n, theta.input_dim()));
}

std::string metrics_csv_header() { return "iter,critic_loss,gen_loss,grad_norm,eps"; }

std::string metrics_csv_row(const StepMetrics& m) {
  return std::to_string(m.iteration) + "," + format_double(m.critic_loss) + "," +
         format_double(m.gen_loss) + "," + format_double(m.grad_norm_pre_clip) +
         "," + format_double(m.eps_spent);
}

}  // namespace dpwgan
