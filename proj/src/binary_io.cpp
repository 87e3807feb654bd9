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
#include "dpwgan/binary_io.hpp"

#include <cstring>

#include "dpwgan/errors.hpp"

namespace dpwgan {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  u64(bits);
}

void ByteWriter::bytes(const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out_.insert(out_.end(), b, b + n);
}

const std::uint8_t* ByteReader::need(std::size_t n) {
  if (in_.size() - pos_ < n) throw FormatError(what_ + ": truncated");
  const auto* p = in_.data() + pos_;
  pos_ += n;
  return p;
}

std::uint8_t ByteReader::u8() { return need(1)[0]; }

std::uint32_t ByteReader::u32() {
  const auto* p = need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  const auto* p = need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

double ByteReader::f64() {
  const std::uint64_t bits = u64();
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::string ByteReader::str(std::size_t n) {
  const auto* p = need(n);
  return {reinterpret_cast<const char*>(p), n};
}

void write_mlp(ByteWriter& w, const MlpParams& params) {
  w.u32(static_cast<std::uint32_t>(params.layers().size()));
  for (const auto& layer : params.layers()) {
    w.u64(layer.inputs());
    w.u64(layer.outputs());
    w.u8(static_cast<std::uint8_t>(layer.activation));
  }
  const FlatView flat = flatten(params);
  w.u64(flat.values.size());
  for (double v : flat.values) w.f64(v);
}

MlpParams read_mlp(ByteReader& r) {
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 64) {
    throw FormatError(r.what() + ": bad layer count");
  }
  MlpShape shape;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint64_t in = r.u64();
    const std::uint64_t out = r.u64();
    const std::uint8_t act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::kLinear)) {
      throw FormatError(r.what() + ": unknown activation code");
    }
    if (l == 0) {
      shape.widths.push_back(in);
    } else if (shape.widths.back() != in) {
      throw FormatError(r.what() + ": layers do not chain");
    }
    shape.widths.push_back(out);
    shape.activations.push_back(static_cast<Activation>(act));
  }
  const std::uint64_t count = r.u64();
  if (count != shape.parameter_count()) {
    throw FormatError(r.what() + ": parameter count does not match the layers");
  }
  FlatView flat;
  flat.values.resize(count);
  for (double& v : flat.values) v = r.f64();
  return unflatten(flat, shape);
}

}  // namespace dpwgan
