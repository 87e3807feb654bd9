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
// Command implementations behind the `dpwgan` executable. Each command
// writes human-readable output to `out`, diagnostics to `err`, and returns
// one of the exit codes below.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "dpwgan/train.hpp"

namespace dpwgan {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitBudgetHalt = 4,
  kExitNumeric = 5,
};

enum class NoiseMode { kAccountant, kClosedForm, kManual };

// Everything a training run reads from its config file.
struct RunConfig {
  TrainConfig train;
  NoiseMode noise_mode = NoiseMode::kAccountant;
  double manual_noise = 0.0;       // used with NoiseMode::kManual
  std::string dataset = "digits";  // "digits" (IDX images) or "ehr" (CSV)
  std::size_t image_side = 8;      // 0 keeps the stored resolution
  std::size_t train_size = 2000;   // leading records used; 0 = all
  std::size_t checkpoint_every = 500;
};

// Flat `key = value` lines; '#' starts a comment. Unknown keys, repeated
// keys and malformed values raise ConfigError carrying the line number.
//
// Keys: alpha_d alpha_g weight_clip grad_clip batch critic_iters gen_iters
// latent_dim hidden seed delta epsilon (number or inf) noise (accountant,
// closed-form or a number) dataset image_side train_size checkpoint_every.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

// Accountant-calibrated noise aims this far below the target so that
// step-by-step ledger accumulation cannot round past it.
inline constexpr double kCalibrationMargin = 1e-9;

struct NoiseResolution {
  std::optional<double> sigma;  // empty when the target is unreachable
  double sigma_closed_form = 0.0;      // closed form, reported alongside
  double q = 0.0;
};

// sigma_n for `config` over a dataset of `n_records`. Non-private runs get 0.
NoiseResolution resolve_noise(const RunConfig& config, std::size_t n_records);

// Caution text when q > 0.05 or n_d > 10 at epsilon <= 10, empty otherwise.
std::string sampling_warning(const TrainConfig& config, double q);

// Dataset rows for a run: images are cropped to a multiple of image_side,
// pooled and mapped to [-1, 1]; EHR records map to {-1, +1}.
Matrix load_training_data(const RunConfig& config,
                          const std::filesystem::path& data_dir);

// MNIST file names inside a data directory.
inline constexpr const char* kTrainImagesFile = "train-images-idx3-ubyte";
inline constexpr const char* kTrainLabelsFile = "train-labels-idx1-ubyte";
inline constexpr const char* kEhrRecordsFile = "records.csv";

struct TrainCommand {
  std::filesystem::path config;
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> resume;
};
int cmd_train(const TrainCommand& cmd, std::ostream& out, std::ostream& err);

struct ScoreCommand {
  std::filesystem::path checkpoint;
  std::filesystem::path label_model;
  std::filesystem::path out_dir;  // scores.csv is appended here
  std::size_t n_samples = 1000;
  std::size_t splits = 10;
  std::uint64_t seed = 1;
  // Run label for the CSV; when absent it is read from the ledger at delta.
  std::optional<double> epsilon_label;
  double delta = 1e-5;
};
int cmd_score(const ScoreCommand& cmd, std::ostream& out, std::ostream& err);

struct AccountantCommand {
  std::string query;  // "eps-for-delta" or "delta-for-eps"
  double q = 0.01;
  double sigma = 1.0;
  std::uint64_t steps = 0;
  double delta = 1e-5;  // eps-for-delta
  double epsilon = 1.0; // delta-for-eps
  std::size_t critic_iters = 5;  // for the closed-form comparison
};
int cmd_accountant(const AccountantCommand& cmd, std::ostream& out,
                   std::ostream& err);

struct CalibrateCommand {
  double epsilon = 10.0;
  double delta = 1e-5;
  double q = 0.01;
  std::size_t critic_iters = 5;
  std::uint64_t steps = 0;  // > 0 adds the accountant-calibrated sigma
};
int cmd_calibrate(const CalibrateCommand& cmd, std::ostream& out, std::ostream& err);

struct SynthEhrCommand {
  std::filesystem::path model;
  std::size_t n = 0;
  std::filesystem::path out_csv;
  std::uint64_t seed = 1;
};
int cmd_synth_ehr(const SynthEhrCommand& cmd, std::ostream& out, std::ostream& err);

struct MakeDigitsCommand {
  std::filesystem::path out_dir;
  std::size_t count = 2500;
  std::uint64_t seed = 1;
};
int cmd_make_digits(const MakeDigitsCommand& cmd, std::ostream& out,
                    std::ostream& err);

struct TrainLabelerCommand {
  std::filesystem::path data_dir;
  std::filesystem::path out;
  std::size_t image_side = 8;
  std::size_t count = 2500;  // leading records; the last fifth is held out
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
};
int cmd_train_labeler(const TrainLabelerCommand& cmd, std::ostream& out,
                      std::ostream& err);

// Zero-padded checkpoint file name, e.g. checkpoint-002000.bin.
std::string checkpoint_name(std::uint64_t iteration);

}  // namespace dpwgan
