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
// Fully connected networks with hand-written backward passes. The backward
// pass is exposed per example so callers can bound each example's influence
// before aggregating.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dpwgan/ndnum.hpp"

namespace dpwgan {

enum class Activation { kRelu, kTanh, kLinear };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

// y = act(x * weight + bias), weight stored as (inputs x outputs).
struct Layer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::kLinear;

  std::size_t inputs() const { return weight.rows(); }
  std::size_t outputs() const { return weight.cols(); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Architecture without values: layer widths and activations.
struct MlpShape {
  std::vector<std::size_t> widths;  // input width followed by each layer's output
  std::vector<Activation> activations;

  std::size_t parameter_count() const;
  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

class MlpParams {
 public:
  MlpParams() = default;
  // Throws ShapeError when consecutive layers do not chain.
  explicit MlpParams(std::vector<Layer> layers);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  MlpShape shape() const;
  bool all_finite() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;

 private:
  std::vector<Layer> layers_;
};

// Flattened parameters: for each layer in order, the weight matrix row-major
// and then its bias.
struct FlatView {
  Vector values;
  friend bool operator==(const FlatView&, const FlatView&) = default;
};

// per_example[i] is the flattened gradient contributed by batch row i.
struct PerExampleGrads {
  std::vector<Vector> per_example;
};

// Summed parameter gradient plus the gradient w.r.t. each input row.
struct BatchGrads {
  Vector params;
  Matrix inputs;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases. Layers are
// filled in order, weights row-major before biases.
MlpParams init_mlp(const MlpShape& shape, RngStream& rng);

FlatView flatten(const MlpParams& params);
MlpParams unflatten(const FlatView& flat, const MlpShape& shape);

Matrix forward(const MlpParams& params, const Matrix& batch);

// Gradient of upstream[i] . forward(params, batch[i]) for every row i.
PerExampleGrads backward_per_example(const MlpParams& params,
                                     const Matrix& batch,
                                     const Matrix& upstream);

// Gradient of sum_i upstream[i] . forward(params, batch[i]), summed over rows
// in batch order, and the matching input gradients.
BatchGrads backward_batch(const MlpParams& params, const Matrix& batch,
                          const Matrix& upstream);

// params + scale * direction, with `direction` in flattened order.
void add_scaled(MlpParams& params, std::span<const double> direction,
                double scale);

// Clamp every weight and bias to [-bound, bound].
void clamp_parameters(MlpParams& params, double bound);

double max_abs_parameter(const MlpParams& params);

}  // namespace dpwgan
