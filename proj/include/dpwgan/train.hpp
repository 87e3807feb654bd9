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
// Differentially private WGAN training. The critic sees real data through a
// clipped, noised, averaged gradient and is weight-clipped after each step.
// The generator only sees the critic and its own prior samples.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpwgan/accountant.hpp"
#include "dpwgan/dp_core.hpp"
#include "dpwgan/errors.hpp"
#include "dpwgan/mlp.hpp"
#include "dpwgan/ndnum.hpp"

namespace dpwgan {

struct TrainConfig {
  double alpha_d = 5e-5;
  double alpha_g = 5e-5;
  double weight_clip = 1e-2;  // c
  double grad_clip = 1e-2;    // C, also the noise sensitivity
  std::size_t batch = 64;     // m; the sampling rate is m / N
  std::size_t critic_iters = 5;
  std::size_t gen_iters = 2000;
  double noise_scale = 0.0;  // sigma_n, a multiplier of C
  std::size_t latent_dim = 64;
  std::size_t hidden = 128;
  std::uint64_t seed = 1;
  double delta = 1e-5;
  double epsilon_target = kNonPrivate;

  bool is_private() const { return epsilon_target != kNonPrivate; }

  // ConfigError on non-positive rates, clips or counts, delta outside (0, 1),
  // or noise_scale > 0 not matching a finite epsilon_target.
  void validate() const;

  // Canonical `key = value` text of every field.
  std::string canonical_text() const;

  // FNV-1a over the fields that shape the trajectory. gen_iters is left out
  // so a run may be resumed and extended.
  std::uint64_t trajectory_hash() const;
};

// Generator: latent -> hidden (relu) -> dim (tanh).
MlpShape generator_shape(const TrainConfig& config, std::size_t data_dim);
// Critic: dim -> hidden (relu) -> 1 (linear).
MlpShape critic_shape(const TrainConfig& config, std::size_t data_dim);

struct StepMetrics {
  std::uint64_t iteration = 0;
  double critic_loss = 0.0;
  double gen_loss = 0.0;
  double grad_norm_pre_clip = 0.0;  // mean per-example norm in critic steps
  double eps_spent = 0.0;
};

// Random streams owned by a training run, children of (seed, stream 1).
struct TrainStreams {
  RngStream sampling{0, 0};
  RngStream latent{0, 0};
  RngStream noise{0, 0};

  static TrainStreams from_seed(std::uint64_t seed);
  friend bool operator==(const TrainStreams&, const TrainStreams&) = default;
};

// Initial parameters come from further children of the run stream.
MlpParams initial_generator(const TrainConfig& config, std::size_t data_dim);
MlpParams initial_critic(const TrainConfig& config, std::size_t data_dim);

// mean(d_real) - mean(d_fake). The critic ascends it.
double wgan_critic_objective(std::span<const double> d_real,
                             std::span<const double> d_fake);

// g_i = grad f(real_i) - grad f(fake_i), one flat gradient per pair.
std::vector<Vector> per_example_critic_gradients(const MlpParams& omega,
                                                 const Matrix& real,
                                                 const Matrix& fake);

// Sum of the clipped gradients, accumulated in index order.
Vector clipped_sum(std::span<const Vector> grads, const ClipSpec& clip);

// Thrown by dp_critic_step when taking the step would push the ledger past
// epsilon_target. Nothing is modified in that case.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(double epsilon_after, double target);
  double epsilon_after() const { return epsilon_after_; }

 private:
  double epsilon_after_;
};

// Moments of one critic step for a fixed (q, sigma_n), computed once per run.
// Empty moments mean the step is not accounted (sigma_n = 0).
struct StepAccounting {
  double q = 0.0;
  double sigma = 0.0;
  std::vector<MomentValue> moments;

  static StepAccounting make(double q, double sigma,
                             std::span<const double> grid = {});
};

struct CriticStepResult {
  MlpParams omega;
  MomentLedger ledger;
  StepMetrics metrics;
};

// One private critic update. Latents come from `latent`, noise from `noise`.
// The ledger gains one step of `accounting`; with empty moments it is left
// unchanged. Throws BudgetExceeded before touching anything when the
// updated ledger would exceed config.epsilon_target.
CriticStepResult dp_critic_step(const MlpParams& omega, const MlpParams& theta,
                                const Matrix& real_batch, RngStream& latent,
                                RngStream& noise, const TrainConfig& config,
                                const MomentLedger& ledger,
                                const StepAccounting& accounting);

// Plain clipped WGAN critic update with no noise and no accounting.
CriticStepResult reference_critic_step(const MlpParams& omega,
                                       const MlpParams& theta,
                                       const Matrix& real_batch,
                                       RngStream& latent,
                                       const TrainConfig& config);

struct GeneratorStepResult {
  MlpParams theta;
  StepMetrics metrics;
};

// Descent on -mean f(G(z)) with the whole gradient clipped by C. Takes no
// data argument.
GeneratorStepResult generator_step(const MlpParams& theta, const MlpParams& omega,
                                   RngStream& rng, const TrainConfig& config);

// Poisson sampling: each row kept independently with probability q, one
// uniform per row.
std::vector<std::size_t> poisson_sample(std::size_t n, double q, RngStream& rng);

struct Checkpoint {
  MlpParams theta;
  MlpParams omega;
  std::uint64_t iteration = 0;  // completed generator iterations
  MomentLedger ledger;
  TrainStreams streams;
  std::uint64_t config_hash = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Little-endian binary layout:
//   "DPWGANCK" | u32 version | u64 config hash | u64 iteration
//   generator: u32 layers, per layer u64 in, u64 out, u8 activation,
//              then u64 count and the flat f64 parameters
//   critic:    same layout
//   u64 length and the ledger text
//   u64 seed, then stream id and counter for sampling, latent, noise
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

enum class TrainStatus { kCompleted, kBudgetHalt, kNumericAbort };

struct TrainResult {
  TrainStatus status = TrainStatus::kCompleted;
  Checkpoint checkpoint;  // last consistent state; diagnostic on abort
  std::vector<StepMetrics> metrics;
  double epsilon = 0.0;   // accountant epsilon at config.delta
  std::string message;
};

struct TrainHooks {
  std::function<void(const StepMetrics&)> on_iteration;
  std::function<void(const Checkpoint&)> on_checkpoint;
  std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints
};

// Runs n_g generator iterations, each after n_d critic steps. With
// `resume`, continues from that state; its config hash must match.
TrainResult train(const TrainConfig& config, const Matrix& data,
                  const std::optional<Checkpoint>& resume = std::nullopt,
                  const TrainHooks& hooks = {});

// The same loop with reference_critic_step in place of dp_critic_step.
TrainResult train_reference(const TrainConfig& config, const Matrix& data);

// Samples from a generator, one row per draw.
Matrix sample_generator(const MlpParams& theta, std::size_t n, RngStream& rng);

// metrics.csv layout: header `iter,critic_loss,gen_loss,grad_norm,eps`.
std::string metrics_csv_header();
std::string metrics_csv_row(const StepMetrics& m);

}  // namespace dpwgan
