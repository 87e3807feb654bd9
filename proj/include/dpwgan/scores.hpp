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
// Sample quality scores: an Inception-style score under a small supervised
// label model, and the generate score over per-split values.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dpwgan/mlp.hpp"
#include "dpwgan/ndnum.hpp"
#include "dpwgan/train.hpp"

namespace dpwgan {

inline constexpr double kProbabilityFloor = 1e-12;

// Classifier with a linear final layer; probabilities are its softmax.
struct LabelModel {
  MlpParams classifier;
  std::size_t classes() const { return classifier.output_dim(); }
  friend bool operator==(const LabelModel&, const LabelModel&) = default;
};

// Row-wise softmax of the classifier logits.
Matrix predict_proba(const LabelModel& model, const Matrix& samples);
double accuracy(const LabelModel& model, const Matrix& samples,
                std::span<const std::uint8_t> labels);

struct LabelModelOptions {
  std::size_t classes = 10;
  std::size_t hidden = 64;
  double learning_rate = 0.1;
  std::size_t batch = 32;
  double holdout_fraction = 0.2;  // trailing rows held out for the gate
  double min_accuracy = 0.9;
};

// Minibatch SGD on cross-entropy over the leading rows, shuffled each epoch
// from `rng`. TrainingError when the held-out accuracy misses the gate.
LabelModel train_label_model(const Matrix& images,
                             std::span<const std::uint8_t> labels,
                             std::size_t epochs, RngStream& rng,
                             const LabelModelOptions& options = {});

// File layout: "DPWGANLM", u32 version, then the classifier as in the
// checkpoint's network encoding.
std::vector<std::uint8_t> serialize_label_model(const LabelModel& model);
LabelModel parse_label_model(std::span<const std::uint8_t> bytes);

// IS per split. Split s covers rows [s*n/splits, (s+1)*n/splits).
// ShapeError unless splits >= 1 and it divides the row count.
std::vector<double> inception_score(const Matrix& samples, const LabelModel& model,
                                    std::size_t splits);

// |IS_last - mean| / (max - min) over `is_values`, 0 when max == min.
// ParameterError for fewer than two values.
double generate_score(std::span<const double> is_values);

struct ScoreReport {
  std::vector<double> is_values;
  double gs = 0.0;
  double epsilon_label = kNonPrivate;
  std::uint64_t seed = 0;

  double is_mean() const;
  double is_std() const;  // population standard deviation over splits
};

ScoreReport score_samples(const Matrix& samples, const LabelModel& model,
                          std::size_t splits);

// Draws n_samples from the checkpoint's generator with `rng` and scores them.
ScoreReport score_run(const Checkpoint& checkpoint, const LabelModel& model,
                      std::size_t n_samples, std::size_t splits, RngStream& rng);

// Header `eps,seed,is_mean,is_std,gs`.
std::string score_csv_header();
std::string score_csv_row(const ScoreReport& report);

}  // namespace dpwgan
