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
// Dense row-major matrices, vector helpers and the counter-based random
// streams that every stochastic component draws from.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace dpwgan {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws ShapeError unless data.size() == rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Standard product. Each output element accumulates a(i,k) * b(k,j) for k in
// ascending order starting from 0.0, so results are reproducible.
Matrix matmul(const Matrix& a, const Matrix& b);

// Rows of `m` picked by `indices`, in that order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double mean(std::span<const double> v);

// 64-bit mixing function used to derive keys and child stream ids.
std::uint64_t splitmix64(std::uint64_t x);

// Philox4x32 with 10 rounds. Counter words and key as in the Random123
// reference definition.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

// A counter-based random stream. Output block n is philox(counter = (n,
// stream_id), key = seed), so any draw can be replayed from its triple.
//
// Consumption per call:
//   next_block()      1 counter, two 64-bit words
//   uniform()         1 counter, first word, 53-bit double in [0, 1)
//   sample_gaussian   ceil(n / 2) counters; each block feeds one Box-Muller
//                     pair (cos branch first, then sin branch)
//
// Streams are single-owner. Parallel consumers take child() streams.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id,
            std::uint64_t counter = 0)
      : seed_(seed), stream_id_(stream_id), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t counter) { counter_ = counter; }

  std::array<std::uint64_t, 2> next_block();
  double uniform();

  // Independent stream keyed by this stream's id and `k`, counter reset to 0.
  RngStream child(std::uint64_t k) const;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_;
};

// n i.i.d. N(mean, std^2) draws via Box-Muller. std == 0 returns `mean`
// exactly but still advances the counter by ceil(n / 2).
Vector sample_gaussian(RngStream& rng, std::size_t n, double mean, double std);

}  // namespace dpwgan
