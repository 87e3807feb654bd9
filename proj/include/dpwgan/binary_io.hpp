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
// Little-endian byte codecs shared by the checkpoint and label-model files.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpwgan/mlp.hpp"

namespace dpwgan {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);  // IEEE-754 bit pattern
  void bytes(const void* p, std::size_t n);
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

// Every read throws FormatError("<what>: truncated") past the end.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, std::string what)
      : in_(in), what_(std::move(what)) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str(std::size_t n);
  bool done() const { return pos_ == in_.size(); }
  const std::string& what() const { return what_; }

 private:
  const std::uint8_t* need(std::size_t n);
  std::span<const std::uint8_t> in_;
  std::string what_;
  std::size_t pos_ = 0;
};

// u32 layer count, per layer u64 in, u64 out, u8 activation, then u64
// parameter count and the flat f64 parameters.
void write_mlp(ByteWriter& w, const MlpParams& params);
MlpParams read_mlp(ByteReader& r);

}  // namespace dpwgan
