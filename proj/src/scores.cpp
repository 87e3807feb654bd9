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
#include "dpwgan/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpwgan/binary_io.hpp"
#include "dpwgan/errors.hpp"
#include "dpwgan/text_io.hpp"

namespace dpwgan {

Matrix predict_proba(const LabelModel& model, const Matrix& samples) {
  Matrix p = forward(model.classifier, samples);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - top);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return p;
}

namespace {

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

double accuracy(const LabelModel& model, const Matrix& samples,
                std::span<const std::uint8_t> labels) {
  if (labels.size() != samples.rows()) throw ShapeError("accuracy: label count");
  if (labels.empty()) return 0.0;
  const Matrix logits = forward(model.classifier, samples);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += argmax(logits.row(i)) == labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

LabelModel train_label_model(const Matrix& images,
                             std::span<const std::uint8_t> labels,
                             std::size_t epochs, RngStream& rng,
                             const LabelModelOptions& options) {
  if (labels.size() != images.rows()) {
    throw ShapeError("train_label_model: " + std::to_string(images.rows()) +
                     " images but " + std::to_string(labels.size()) + " labels");
  }
  for (auto y : labels) {
    if (y >= options.classes) throw ValidationError("label outside class range");
  }
  const auto n_holdout = static_cast<std::size_t>(
      std::floor(options.holdout_fraction * static_cast<double>(images.rows())));
  const std::size_t n_train = images.rows() - n_holdout;
  if (n_train == 0 || n_holdout == 0) {
    throw ValidationError("train_label_model: need rows for training and held-out");
  }

  const MlpShape shape{{images.cols(), options.hidden, options.classes},
                       {Activation::kRelu, Activation::kLinear}};
  LabelModel model{init_mlp(shape, rng)};
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates from the model stream.
    for (std::size_t i = n_train; i-- > 1;) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < n_train; start += options.batch) {
      const std::size_t end = std::min(n_train, start + options.batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix x = gather_rows(images, idx);
      Matrix up = predict_proba(model, x);
      const double b = static_cast<double>(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        up(i, labels[idx[i]]) -= 1.0;
        for (double& v : up.row(i)) v /= b;
      }
      const Vector g = backward_batch(model.classifier, x, up).params;
      add_scaled(model.classifier, g, -options.learning_rate);
    }
  }

  std::vector<std::size_t> held(n_holdout);
  std::iota(held.begin(), held.end(), n_train);
  const double acc = accuracy(model, gather_rows(images, held),
                              labels.subspan(n_train, n_holdout));
  if (acc < options.min_accuracy) {
    throw TrainingError("label model reached " + format_fixed(100.0 * acc, 1) +
                        "% held-out accuracy, below the " +
                        format_fixed(100.0 * options.min_accuracy, 1) +
                        "% gate; train for more epochs or on more data");
  }
  return model;
}

namespace {
constexpr char kLabelModelMagic[8] = {'D', 'P', 'W', 'G', 'A', 'N', 'L', 'M'};
constexpr std::uint32_t kLabelModelVersion = 1;
}  // namespace

std::vector<std::uint8_t> serialize_label_model(const LabelModel& model) {
  ByteWriter w;
  w.bytes(kLabelModelMagic, sizeof kLabelModelMagic);
  w.u32(kLabelModelVersion);
  write_mlp(w, model.classifier);
  return w.take();
}

LabelModel parse_label_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "label model");
  if (r.str(sizeof kLabelModelMagic) !=
      std::string(kLabelModelMagic, sizeof kLabelModelMagic)) {
    throw FormatError("label model: bad magic");
  }
  if (r.u32() != kLabelModelVersion) throw FormatError("label model: bad version");
  LabelModel model{read_mlp(r)};
  if (!r.done()) throw FormatError("label model: trailing bytes");
  return model;
}

std::vector<double> inception_score(const Matrix& samples, const LabelModel& model,
                                    std::size_t splits) {
  const std::size_t n = samples.rows();
  if (n == 0) throw ShapeError("inception_score: no samples");
  if (splits == 0 || n % splits != 0) {
    throw ShapeError("inception_score: " + std::to_string(splits) +
                     " splits do not divide " + std::to_string(n) + " samples");
  }
  const Matrix p = predict_proba(model, samples);
  const std::size_t k = p.cols();
  const std::size_t per = n / splits;
  std::vector<double> scores;
  scores.reserve(splits);
  for (std::size_t s = 0; s < splits; ++s) {
    Vector marginal(k, 0.0);
    for (std::size_t i = s * per; i < (s + 1) * per; ++i) {
      for (std::size_t c = 0; c < k; ++c) marginal[c] += p(i, c);
    }
    for (double& v : marginal) v = std::max(v / static_cast<double>(per), kProbabilityFloor);
    double kl_sum = 0.0;
    for (std::size_t i = s * per; i < (s + 1) * per; ++i) {
      double kl = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double pc = std::max(p(i, c), kProbabilityFloor);
        kl += pc * (std::log(pc) - std::log(marginal[c]));
      }
      kl_sum += kl;
    }
    scores.push_back(std::exp(kl_sum / static_cast<double>(per)));
  }
  return scores;
}

double generate_score(std::span<const double> is_values) {
  if (is_values.size() < 2) {
    throw ParameterError("generate_score: need at least two values");
  }
  const auto [lo, hi] = std::minmax_element(is_values.begin(), is_values.end());
  if (*hi == *lo) return 0.0;
  const double avg = mean(is_values);
  return std::min(1.0, std::abs((is_values.back() - avg) / (*hi - *lo)));
}

double ScoreReport::is_mean() const { return mean(is_values); }

double ScoreReport::is_std() const {
  if (is_values.empty()) return 0.0;
  const double m = is_mean();
  double s = 0.0;
  for (double v : is_values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(is_values.size()));
}

ScoreReport score_samples(const Matrix& samples, const LabelModel& model,
                          std::size_t splits) {
  ScoreReport report;
  report.is_values = inception_score(samples, model, splits);
  report.gs = report.is_values.size() >= 2 ? generate_score(report.is_values) : 0.0;
  return report;
}

ScoreReport score_run(const Checkpoint& checkpoint, const LabelModel& model,
                      std::size_t n_samples, std::size_t splits, RngStream& rng) {
  if (checkpoint.theta.output_dim() != model.classifier.input_dim()) {
    throw ShapeError("score_run: generator emits " +
                     std::to_string(checkpoint.theta.output_dim()) +
                     " values, label model expects " +
                     std::to_string(model.classifier.input_dim()));
  }
  return score_samples(sample_generator(checkpoint.theta, n_samples, rng), model,
                       splits);
}

std::string score_csv_header() { return "eps,seed,is_mean,is_std,gs"; }

std::string score_csv_row(const ScoreReport& r) {
  return format_double(r.epsilon_label) + "," + std::to_string(r.seed) + "," +
         format_double(r.is_mean()) + "," + format_double(r.is_std()) + "," +
         format_double(r.gs);
}

}  // namespace dpwgan
