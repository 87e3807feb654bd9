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
// Dataset ingestion: IDX image/label files, image normalisation, ICD9
// admission vectors and two synthetic data sources (EHR records and rendered
// digits in the IDX layout).
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpwgan/ndnum.hpp"

namespace dpwgan {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImageSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, image-major

  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * rows * cols, rows * cols};
  }
  friend bool operator==(const IdxImageSet&, const IdxImageSet&) = default;
};

struct LabeledImages {
  IdxImageSet images;
  std::vector<std::uint8_t> labels;
};

// Byte-level codecs. Parsing validates the magic (FormatError naming the
// value found) and the payload length (FormatError on truncation).
IdxImageSet parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx_images(const IdxImageSet& set);
std::vector<std::uint8_t> serialize_idx_labels(std::span<const std::uint8_t> labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

// Reads an image file and its label file; counts must agree.
LabeledImages load_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path);
void save_idx(const LabeledImages& data, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

// Keeps the central side x side window of every image.
IdxImageSet center_crop(const IdxImageSet& set, std::size_t side);

// One row per image, pixels mapped to [-1, 1] by p / 127.5 - 1. With
// `downsample`, side x side average pooling is applied first; the side must
// divide both image dimensions.
Matrix normalize_images(const IdxImageSet& set,
                        std::optional<std::size_t> downsample = std::nullopt);

// First `n` images and labels.
LabeledImages take_prefix(const LabeledImages& data, std::size_t n);
LabeledImages drop_prefix(const LabeledImages& data, std::size_t n);

// Procedural handwritten-style digits, 28x28, label-balanced in round-robin
// order. Each image applies a random rotation, scale, shear, shift, vertex
// jitter and stroke width to a fixed glyph for its class.
LabeledImages synthesize_digits(std::size_t n, RngStream& rng);

// --- EHR ----------------------------------------------------------------

inline constexpr int kIcd9CodeCount = 1071;

// Binary admission vector indexed by 1-based code position.
class EhrRecord {
 public:
  EhrRecord() : bits_(kIcd9CodeCount, 0) {}
  explicit EhrRecord(std::vector<std::uint8_t> bits);

  bool has(int position) const { return bits_.at(position - 1) != 0; }
  void set(int position);
  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const EhrRecord&, const EhrRecord&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Position of an ICD9 code string such as "401.9" or "0421": the integer
// formed by its first three digits. ValidationError for codes without
// leading digits (V/E codes) or a zero position.
int icd9_position(std::string_view code);

// Sets the bit of each listed position (1-based). Duplicates collapse.
// ValidationError naming the code when one falls outside [1, 1071].
EhrRecord encode_admission(std::span<const int> positions);

// Union of the set bits across admissions of one patient.
EhrRecord merge_admissions(std::span<const EhrRecord> admissions);

struct ComorbidityPair {
  int given = 0;    // 1-based position
  int target = 0;   // 1-based position
  double lift = 1.0;
};

struct SynthEhrModel {
  std::vector<double> prevalence = std::vector<double>(kIcd9CodeCount, 0.0);
  std::vector<ComorbidityPair> pairs;

  // Throws ValidationError on rates outside [0, 1], negative lifts or bad
  // positions.
  void validate() const;
};

// Text model format, one directive per line, '#' starts a comment:
//   default <rate>               prevalence for every code
//   code <position> <rate>       prevalence for one code
//   pair <given> <target> <lift> comorbidity boost
SynthEhrModel parse_ehr_model(std::string_view text);
SynthEhrModel load_ehr_model(const std::filesystem::path& path);

// Each record draws one uniform u_c per code. Code c is set when
// u_c < prevalence[c]. Then for every pair whose `given` code is set the
// target is re-decided with rate min(1, lift * prevalence[target]) using the
// same u_target.
std::vector<EhrRecord> synthesize_ehr(const SynthEhrModel& model, std::size_t n,
                                      RngStream& rng);

// Header row "1,...,1071", then one 0/1 row per record, LF endings.
void write_ehr_csv(std::ostream& out, std::span<const EhrRecord> records);
std::vector<EhrRecord> read_ehr_csv(std::istream& in);

// Records as rows of a matrix with entries in {-1, +1}.
Matrix ehr_to_matrix(std::span<const EhrRecord> records);

}  // namespace dpwgan
