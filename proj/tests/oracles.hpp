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
// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the code path it is meant to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "dpwgan/mlp.hpp"
#include "dpwgan/ndnum.hpp"

namespace dpwgan::oracle {

// Scalar-by-scalar evaluation of one row, no matmul.
inline Vector reference_forward_row(const MlpParams& params,
                                    std::span<const double> x) {
  Vector a(x.begin(), x.end());
  for (const Layer& layer : params.layers()) {
    Vector next(layer.outputs());
    for (std::size_t k = 0; k < layer.outputs(); ++k) {
      double z = 0.0;
      for (std::size_t r = 0; r < layer.inputs(); ++r) z += a[r] * layer.weight(r, k);
      z += layer.bias[k];
      switch (layer.activation) {
        case Activation::kRelu:
          next[k] = std::max(z, 0.0);
          break;
        case Activation::kTanh:
          next[k] = std::tanh(z);
          break;
        case Activation::kLinear:
          next[k] = z;
          break;
      }
    }
    a = std::move(next);
  }
  return a;
}

// Smallest |pre-activation| over relu units for one row; finite differences
// are meaningless near a kink.
inline double min_relu_margin(const MlpParams& params, std::span<const double> x) {
  double margin = 1e300;
  Vector a(x.begin(), x.end());
  for (const Layer& layer : params.layers()) {
    Vector next(layer.outputs());
    for (std::size_t k = 0; k < layer.outputs(); ++k) {
      double z = layer.bias[k];
      for (std::size_t r = 0; r < layer.inputs(); ++r) z += a[r] * layer.weight(r, k);
      if (layer.activation == Activation::kRelu) margin = std::min(margin, std::abs(z));
      next[k] = layer.activation == Activation::kRelu   ? std::max(z, 0.0)
                : layer.activation == Activation::kTanh ? std::tanh(z)
                                                        : z;
    }
    a = std::move(next);
  }
  return margin;
}

// Central differences of upstream . f(x) with respect to every flattened
// parameter.
inline Vector finite_difference_gradient(const MlpParams& params,
                                         std::span<const double> x,
                                         std::span<const double> upstream,
                                         double h) {
  const MlpShape shape = params.shape();
  const FlatView base = flatten(params);
  Vector grad(base.values.size());
  for (std::size_t p = 0; p < base.values.size(); ++p) {
    FlatView plus = base;
    FlatView minus = base;
    plus.values[p] += h;
    minus.values[p] -= h;
    const Vector fp = reference_forward_row(unflatten(plus, shape), x);
    const Vector fm = reference_forward_row(unflatten(minus, shape), x);
    double diff = 0.0;
    for (std::size_t k = 0; k < fp.size(); ++k) diff += upstream[k] * (fp[k] - fm[k]);
    grad[p] = diff / (2.0 * h);
  }
  return grad;
}

inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Plain-space sub-sampled Gaussian moment by a uniform Riemann sum, both
// directions, max taken. Usable while the integrands stay in double range.
inline double riemann_subsampled_gaussian(double q, double sigma, double lambda,
                                          std::size_t points, double half_width) {
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  const double dz = 2.0 * half_width / static_cast<double>(points);
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double z = -half_width + (static_cast<double>(i) + 0.5) * dz;
    const double mu0 = norm * std::exp(-z * z / (2 * sigma * sigma));
    const double mu1 = norm * std::exp(-(z - 1) * (z - 1) / (2 * sigma * sigma));
    const double mu = (1 - q) * mu0 + q * mu1;
    if (mu0 > 0) a += mu * std::pow(mu / mu0, lambda) * dz;
    if (mu > 0) b += mu0 * std::pow(mu0 / mu, lambda) * dz;
  }
  return std::log(std::max(a, b));
}

// log sum_o p_d(o)^(lambda+1) p_d'(o)^(-lambda), straight from the tables.
inline double enumerate_moment(const std::vector<double>& pd,
                               const std::vector<double>& pdp, double lambda) {
  double s = 0.0;
  for (std::size_t o = 0; o < pd.size(); ++o) {
    if (pd[o] == 0.0) continue;
    s += std::pow(pd[o], lambda + 1.0) * std::pow(pdp[o], -lambda);
  }
  return std::log(s);
}

}  // namespace dpwgan::oracle
