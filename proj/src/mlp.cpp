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
#include "dpwgan/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "dpwgan/errors.hpp"

namespace dpwgan {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kLinear:
      return "linear";
  }
  return "linear";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "linear") return Activation::kLinear;
  throw FormatError("unknown activation '" + name + "'");
}

std::size_t MlpShape::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    n += widths[l] * widths[l + 1] + widths[l + 1];
  }
  return n;
}

MlpParams::MlpParams(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].outputs()) {
      throw ShapeError("layer " + std::to_string(l) + ": bias length " +
                       std::to_string(layers_[l].bias.size()) +
                       " != output width " +
                       std::to_string(layers_[l].outputs()));
    }
    if (l > 0 && layers_[l].inputs() != layers_[l - 1].outputs()) {
      throw ShapeError("layer " + std::to_string(l) + " expects " +
                       std::to_string(layers_[l].inputs()) +
                       " inputs but previous layer emits " +
                       std::to_string(layers_[l - 1].outputs()));
    }
  }
}

std::size_t MlpParams::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().inputs();
}

std::size_t MlpParams::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().outputs();
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.parameter_count();
  return n;
}

MlpShape MlpParams::shape() const {
  MlpShape s;
  if (layers_.empty()) return s;
  s.widths.push_back(layers_.front().inputs());
  for (const auto& layer : layers_) {
    s.widths.push_back(layer.outputs());
    s.activations.push_back(layer.activation);
  }
  return s;
}

bool MlpParams::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.all_finite()) return false;
    for (double b : layer.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

MlpParams init_mlp(const MlpShape& shape, RngStream& rng) {
  if (shape.widths.size() != shape.activations.size() + 1) {
    throw ShapeError("MlpShape: need one activation per layer");
  }
  std::vector<Layer> layers;
  for (std::size_t l = 0; l < shape.activations.size(); ++l) {
    const std::size_t in = shape.widths[l];
    const std::size_t out = shape.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer{Matrix(in, out), Vector(out), shape.activations[l]};
    for (double& w : layer.weight.data()) w = bound * (2.0 * rng.uniform() - 1.0);
    for (double& b : layer.bias) b = bound * (2.0 * rng.uniform() - 1.0);
    layers.push_back(std::move(layer));
  }
  return MlpParams(std::move(layers));
}

FlatView flatten(const MlpParams& params) {
  FlatView flat;
  flat.values.reserve(params.parameter_count());
  for (const auto& layer : params.layers()) {
    flat.values.insert(flat.values.end(), layer.weight.data().begin(),
                       layer.weight.data().end());
    flat.values.insert(flat.values.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

MlpParams unflatten(const FlatView& flat, const MlpShape& shape) {
  if (shape.widths.size() != shape.activations.size() + 1) {
    throw ShapeError("MlpShape: need one activation per layer");
  }
  if (flat.values.size() != shape.parameter_count()) {
    throw ShapeError("unflatten: got " + std::to_string(flat.values.size()) +
                     " values for a shape with " +
                     std::to_string(shape.parameter_count()) + " parameters");
  }
  std::vector<Layer> layers;
  auto it = flat.values.begin();
  for (std::size_t l = 0; l < shape.activations.size(); ++l) {
    const std::size_t in = shape.widths[l];
    const std::size_t out = shape.widths[l + 1];
    std::vector<double> w(it, it + static_cast<std::ptrdiff_t>(in * out));
    it += static_cast<std::ptrdiff_t>(in * out);
    Vector b(it, it + static_cast<std::ptrdiff_t>(out));
    it += static_cast<std::ptrdiff_t>(out);
    layers.push_back(Layer{Matrix(in, out, std::move(w)), std::move(b),
                           shape.activations[l]});
  }
  return MlpParams(std::move(layers));
}

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kLinear:
      return x;
  }
  return x;
}

// Derivative expressed through the pre-activation and the activation output.
double activation_slope(Activation a, double pre, double post) {
  switch (a) {
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - post * post;
    case Activation::kLinear:
      return 1.0;
  }
  return 1.0;
}

// Batch activations: outputs[0] is the input, outputs[l + 1] the output of
// layer l; pre[l] holds layer l's pre-activation.
struct ForwardCache {
  std::vector<Matrix> pre;
  std::vector<Matrix> outputs;
};

void check_input(const MlpParams& params, const Matrix& batch) {
  if (params.layers().empty()) throw ShapeError("network has no layers");
  if (batch.cols() != params.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " columns, network expects " +
                     std::to_string(params.input_dim()));
  }
}

ForwardCache run_forward(const MlpParams& params, const Matrix& batch) {
  check_input(params, batch);
  ForwardCache cache;
  cache.outputs.push_back(batch);
  for (const auto& layer : params.layers()) {
    Matrix z = matmul(cache.outputs.back(), layer.weight);
    Matrix y(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t j = 0; j < z.cols(); ++j) {
        z(i, j) += layer.bias[j];
        y(i, j) = activate(layer.activation, z(i, j));
      }
    }
    cache.pre.push_back(std::move(z));
    cache.outputs.push_back(std::move(y));
  }
  return cache;
}

// Backpropagates row `i` of `upstream`. Parameter gradients are accumulated
// into `param_grad` (flattened order); the input gradient is written into
// `input_grad` when non-empty.
void backprop_row(const MlpParams& params, const ForwardCache& cache,
                  const Matrix& upstream, std::size_t i,
                  std::span<double> param_grad, std::span<double> input_grad,
                  std::vector<std::size_t>& offsets) {
  const auto& layers = params.layers();
  const std::size_t n_layers = layers.size();
  Vector delta(upstream.row(i).begin(), upstream.row(i).end());
  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& layer = layers[l];
    const std::size_t in = layer.inputs();
    const std::size_t out = layer.outputs();
    for (std::size_t k = 0; k < out; ++k) {
      delta[k] *= activation_slope(layer.activation, cache.pre[l](i, k),
                                   cache.outputs[l + 1](i, k));
    }
    const auto x = cache.outputs[l].row(i);
    double* gw = param_grad.data() + offsets[l];
    for (std::size_t r = 0; r < in; ++r) {
      const double xr = x[r];
      double* dst = gw + r * out;
      for (std::size_t k = 0; k < out; ++k) dst[k] += xr * delta[k];
    }
    double* gb = gw + in * out;
    for (std::size_t k = 0; k < out; ++k) gb[k] += delta[k];

    if (l == 0 && input_grad.empty()) break;
    Vector prev(in, 0.0);
    for (std::size_t r = 0; r < in; ++r) {
      const double* w = layer.weight.row(r).data();
      double s = 0.0;
      for (std::size_t k = 0; k < out; ++k) s += w[k] * delta[k];
      prev[r] = s;
    }
    if (l == 0) {
      std::copy(prev.begin(), prev.end(), input_grad.begin());
    }
    delta = std::move(prev);
  }
}

std::vector<std::size_t> layer_offsets(const MlpParams& params) {
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& layer : params.layers()) {
    offsets.push_back(off);
    off += layer.parameter_count();
  }
  return offsets;
}

void check_upstream(const MlpParams& params, const Matrix& batch,
                    const Matrix& upstream) {
  if (upstream.rows() != batch.rows() || upstream.cols() != params.output_dim()) {
    throw ShapeError("upstream is " + std::to_string(upstream.rows()) + "x" +
                     std::to_string(upstream.cols()) + ", expected " +
                     std::to_string(batch.rows()) + "x" +
                     std::to_string(params.output_dim()));
  }
}

}  // namespace

Matrix forward(const MlpParams& params, const Matrix& batch) {
  return std::move(run_forward(params, batch).outputs.back());
}

PerExampleGrads backward_per_example(const MlpParams& params,
                                     const Matrix& batch,
                                     const Matrix& upstream) {
  check_input(params, batch);
  check_upstream(params, batch, upstream);
  const ForwardCache cache = run_forward(params, batch);
  auto offsets = layer_offsets(params);
  const std::size_t p = params.parameter_count();
  PerExampleGrads grads;
  grads.per_example.reserve(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    Vector g(p, 0.0);
    backprop_row(params, cache, upstream, i, g, {}, offsets);
    grads.per_example.push_back(std::move(g));
  }
  return grads;
}

BatchGrads backward_batch(const MlpParams& params, const Matrix& batch,
                          const Matrix& upstream) {
  check_input(params, batch);
  check_upstream(params, batch, upstream);
  const ForwardCache cache = run_forward(params, batch);
  auto offsets = layer_offsets(params);
  BatchGrads grads{Vector(params.parameter_count(), 0.0),
                   Matrix(batch.rows(), batch.cols())};
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    backprop_row(params, cache, upstream, i, grads.params, grads.inputs.row(i),
                 offsets);
  }
  return grads;
}

void add_scaled(MlpParams& params, std::span<const double> direction,
                double scale) {
  if (direction.size() != params.parameter_count()) {
    throw ShapeError("add_scaled: direction length mismatch");
  }
  std::size_t idx = 0;
  for (auto& layer : params.mutable_layers()) {
    for (double& w : layer.weight.data()) w += scale * direction[idx++];
    for (double& b : layer.bias) b += scale * direction[idx++];
  }
}

void clamp_parameters(MlpParams& params, double bound) {
  for (auto& layer : params.mutable_layers()) {
    for (double& w : layer.weight.data()) w = std::clamp(w, -bound, bound);
    for (double& b : layer.bias) b = std::clamp(b, -bound, bound);
  }
}

double max_abs_parameter(const MlpParams& params) {
  double m = 0.0;
  for (const auto& layer : params.layers()) {
    for (double w : layer.weight.data()) m = std::max(m, std::abs(w));
    for (double b : layer.bias) m = std::max(m, std::abs(b));
  }
  return m;
}

}  // namespace dpwgan
