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
#include "dpwgan/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dpwgan/errors.hpp"
#include "dpwgan/text_io.hpp"

namespace dpwgan {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xf];
  return s;
}

void check_header(std::span<const std::uint8_t> bytes, std::size_t header_len,
                  std::uint32_t expected_magic, const char* what) {
  if (bytes.size() < 4) {
    throw FormatError(std::string(what) + ": file shorter than its magic number");
  }
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected_magic) {
    throw FormatError(std::string(what) + ": bad magic " + hex32(magic) +
                      ", expected " + hex32(expected_magic));
  }
  if (bytes.size() < header_len) {
    throw FormatError(std::string(what) + ": truncated header");
  }
}

}  // namespace

IdxImageSet parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_header(bytes, 16, kIdxImageMagic, "IDX images");
  IdxImageSet set;
  set.count = read_be32(bytes, 4);
  set.rows = read_be32(bytes, 8);
  set.cols = read_be32(bytes, 12);
  const std::size_t payload = set.count * set.rows * set.cols;
  if (bytes.size() - 16 < payload) {
    throw FormatError("IDX images: header promises " + std::to_string(payload) +
                      " pixel bytes, file holds " + std::to_string(bytes.size() - 16));
  }
  if (bytes.size() - 16 > payload) {
    throw FormatError("IDX images: trailing bytes after pixel payload");
  }
  set.pixels.assign(bytes.begin() + 16, bytes.end());
  return set;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_header(bytes, 8, kIdxLabelMagic, "IDX labels");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 != count) {
    throw FormatError("IDX labels: header promises " + std::to_string(count) +
                      " labels, file holds " + std::to_string(bytes.size() - 8));
  }
  return {bytes.begin() + 8, bytes.end()};
}

std::vector<std::uint8_t> serialize_idx_images(const IdxImageSet& set) {
  if (set.pixels.size() != set.count * set.rows * set.cols) {
    throw ShapeError("IDX images: pixel buffer does not match dimensions");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + set.pixels.size());
  append_be32(out, kIdxImageMagic);
  append_be32(out, static_cast<std::uint32_t>(set.count));
  append_be32(out, static_cast<std::uint32_t>(set.rows));
  append_be32(out, static_cast<std::uint32_t>(set.cols));
  out.insert(out.end(), set.pixels.begin(), set.pixels.end());
  return out;
}

std::vector<std::uint8_t> serialize_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  append_be32(out, kIdxLabelMagic);
  append_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

LabeledImages load_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path) {
  LabeledImages data;
  data.images = parse_idx_images(read_file_bytes(images_path));
  data.labels = parse_idx_labels(read_file_bytes(labels_path));
  if (data.labels.size() != data.images.count) {
    throw FormatError("IDX: " + std::to_string(data.images.count) + " images but " +
                      std::to_string(data.labels.size()) + " labels");
  }
  return data;
}

void save_idx(const LabeledImages& data, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  write_file_bytes(images_path, serialize_idx_images(data.images));
  write_file_bytes(labels_path, serialize_idx_labels(data.labels));
}

IdxImageSet center_crop(const IdxImageSet& set, std::size_t side) {
  if (side > set.rows || side > set.cols) {
    throw ShapeError("center_crop: window larger than the image");
  }
  const std::size_t r0 = (set.rows - side) / 2;
  const std::size_t c0 = (set.cols - side) / 2;
  IdxImageSet out{set.count, side, side, {}};
  out.pixels.reserve(set.count * side * side);
  for (std::size_t i = 0; i < set.count; ++i) {
    const auto img = set.image(i);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        out.pixels.push_back(img[(r0 + r) * set.cols + c0 + c]);
      }
    }
  }
  return out;
}

Matrix normalize_images(const IdxImageSet& set, std::optional<std::size_t> downsample) {
  std::size_t out_rows = set.rows;
  std::size_t out_cols = set.cols;
  std::size_t block_r = 1;
  std::size_t block_c = 1;
  if (downsample) {
    const std::size_t side = *downsample;
    if (side == 0 || set.rows % side != 0 || set.cols % side != 0) {
      throw ShapeError("normalize_images: side " + std::to_string(side) +
                       " does not divide " + std::to_string(set.rows) + "x" +
                       std::to_string(set.cols));
    }
    out_rows = out_cols = side;
    block_r = set.rows / side;
    block_c = set.cols / side;
  }
  const double block = static_cast<double>(block_r * block_c);
  Matrix out(set.count, out_rows * out_cols);
  for (std::size_t i = 0; i < set.count; ++i) {
    const auto img = set.image(i);
    for (std::size_t r = 0; r < out_rows; ++r) {
      for (std::size_t c = 0; c < out_cols; ++c) {
        double sum = 0.0;
        for (std::size_t dr = 0; dr < block_r; ++dr) {
          for (std::size_t dc = 0; dc < block_c; ++dc) {
            sum += img[(r * block_r + dr) * set.cols + c * block_c + dc];
          }
        }
        out(i, r * out_cols + c) = (sum / block) / 127.5 - 1.0;
      }
    }
  }
  return out;
}

LabeledImages take_prefix(const LabeledImages& data, std::size_t n) {
  n = std::min(n, data.images.count);
  const std::size_t px = data.images.rows * data.images.cols;
  LabeledImages out;
  out.images = {n, data.images.rows, data.images.cols,
                {data.images.pixels.begin(),
                 data.images.pixels.begin() + static_cast<std::ptrdiff_t>(n * px)}};
  out.labels.assign(data.labels.begin(),
                    data.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

LabeledImages drop_prefix(const LabeledImages& data, std::size_t n) {
  n = std::min(n, data.images.count);
  const std::size_t px = data.images.rows * data.images.cols;
  LabeledImages out;
  out.images = {data.images.count - n, data.images.rows, data.images.cols,
                {data.images.pixels.begin() + static_cast<std::ptrdiff_t>(n * px),
                 data.images.pixels.end()}};
  out.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(n),
                    data.labels.end());
  return out;
}

// --- Rendered digits ------------------------------------------------------

namespace {

struct Point {
  double x;
  double y;
};
using Stroke = std::vector<Point>;

Stroke arc(double cx, double cy, double rx, double ry, double from_deg,
           double to_deg, int segments = 14) {
  Stroke s;
  for (int i = 0; i <= segments; ++i) {
    const double t = (from_deg + (to_deg - from_deg) * i / segments) *
                     std::numbers::pi / 180.0;
    s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return s;
}

Stroke concat(Stroke a, const Stroke& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Glyphs in a unit box, x to the right and y downwards. Angles are measured
// clockwise on screen because y points down.
std::vector<Stroke> glyph(int digit) {
  switch (digit) {
    case 0:
      return {arc(0.5, 0.5, 0.28, 0.42, 0, 360, 24)};
    case 1:
      return {{{0.36, 0.22}, {0.54, 0.08}, {0.54, 0.92}}};
    case 2:
      return {concat(arc(0.5, 0.32, 0.26, 0.22, 180, 380),
                     Stroke{{0.22, 0.92}, {0.8, 0.92}})};
    case 3:
      return {concat(arc(0.47, 0.3, 0.24, 0.2, 200, 450),
                     arc(0.47, 0.7, 0.27, 0.22, 270, 520))};
    case 4:
      return {{{0.64, 0.92}, {0.64, 0.08}, {0.18, 0.64}, {0.82, 0.64}}};
    case 5:
      return {concat(Stroke{{0.76, 0.1}, {0.32, 0.1}, {0.28, 0.46}},
                     arc(0.5, 0.66, 0.27, 0.25, 220, 500))};
    case 6:
      return {concat(Stroke{{0.68, 0.08}, {0.42, 0.3}},
                     arc(0.5, 0.68, 0.24, 0.23, 190, 550))};
    case 7:
      return {{{0.2, 0.1}, {0.8, 0.1}, {0.42, 0.92}}};
    case 8:
      return {arc(0.5, 0.29, 0.2, 0.19, 0, 360, 20),
              arc(0.5, 0.7, 0.25, 0.22, 0, 360, 20)};
    default:
      return {concat(arc(0.48, 0.32, 0.22, 0.22, 0, 360, 20),
                     Stroke{{0.7, 0.32}, {0.62, 0.92}})};
  }
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx);
  const double dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

LabeledImages synthesize_digits(std::size_t n, RngStream& rng) {
  constexpr std::size_t kSide = 28;
  LabeledImages out;
  out.images = {n, kSide, kSide, std::vector<std::uint8_t>(n * kSide * kSide, 0)};
  out.labels.resize(n);
  const auto uniform_in = [&](double lo, double hi) {
    return lo + (hi - lo) * rng.uniform();
  };
  for (std::size_t i = 0; i < n; ++i) {
    const int digit = static_cast<int>(i % 10);
    out.labels[i] = static_cast<std::uint8_t>(digit);
    const double angle = uniform_in(-0.2, 0.2);
    const double scale = 20.0 * uniform_in(0.8, 1.05);
    const double aspect = uniform_in(0.85, 1.15);
    const double shear = uniform_in(-0.25, 0.25);
    const double shift_x = uniform_in(-1.5, 1.5);
    const double shift_y = uniform_in(-1.5, 1.5);
    const double thickness = uniform_in(1.5, 2.7);
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);

    std::vector<Stroke> strokes = glyph(digit);
    for (auto& stroke : strokes) {
      for (auto& p : stroke) {
        const double jx = p.x + uniform_in(-0.025, 0.025) - 0.5;
        const double jy = p.y + uniform_in(-0.025, 0.025) - 0.5;
        const double sx = (jx + shear * jy) * scale * aspect;
        const double sy = jy * scale;
        p = {ca * sx - sa * sy + 14.0 + shift_x, sa * sx + ca * sy + 14.0 + shift_y};
      }
    }
    std::uint8_t* img = out.images.pixels.data() + i * kSide * kSide;
    for (std::size_t r = 0; r < kSide; ++r) {
      for (std::size_t c = 0; c < kSide; ++c) {
        const Point centre{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
        double d = 1e9;
        for (const auto& stroke : strokes) {
          for (std::size_t k = 0; k + 1 < stroke.size(); ++k) {
            d = std::min(d, segment_distance(centre, stroke[k], stroke[k + 1]));
          }
        }
        const double ink = std::clamp(0.5 * thickness + 0.5 - d, 0.0, 1.0);
        img[r * kSide + c] = static_cast<std::uint8_t>(std::lround(255.0 * ink));
      }
    }
  }
  return out;
}

// --- EHR ------------------------------------------------------------------

EhrRecord::EhrRecord(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  if (bits_.size() != static_cast<std::size_t>(kIcd9CodeCount)) {
    throw ValidationError("EHR record must have " + std::to_string(kIcd9CodeCount) +
                          " entries, got " + std::to_string(bits_.size()));
  }
  for (auto b : bits_) {
    if (b > 1) throw ValidationError("EHR record entries must be 0 or 1");
  }
}

void EhrRecord::set(int position) {
  if (position < 1 || position > kIcd9CodeCount) {
    throw ValidationError("ICD9 position " + std::to_string(position) +
                          " outside [1, " + std::to_string(kIcd9CodeCount) + "]");
  }
  bits_[static_cast<std::size_t>(position - 1)] = 1;
}

std::size_t EhrRecord::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

int icd9_position(std::string_view code) {
  code = trim(code);
  int value = 0;
  int digits = 0;
  for (char ch : code) {
    if (ch == '.') continue;
    if (ch < '0' || ch > '9') break;
    if (digits == 3) break;
    value = value * 10 + (ch - '0');
    ++digits;
  }
  if (digits == 0) {
    throw ValidationError("ICD9 code '" + std::string(code) +
                          "' has no leading digits");
  }
  if (value < 1) {
    throw ValidationError("ICD9 code '" + std::string(code) + "' maps to position 0");
  }
  return value;
}

EhrRecord encode_admission(std::span<const int> positions) {
  EhrRecord record;
  for (int p : positions) record.set(p);
  return record;
}

EhrRecord merge_admissions(std::span<const EhrRecord> admissions) {
  std::vector<std::uint8_t> bits(kIcd9CodeCount, 0);
  for (const auto& a : admissions) {
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= a.bits()[i];
  }
  return EhrRecord(std::move(bits));
}

void SynthEhrModel::validate() const {
  if (prevalence.size() != static_cast<std::size_t>(kIcd9CodeCount)) {
    throw ValidationError("EHR model needs one prevalence per code");
  }
  for (std::size_t i = 0; i < prevalence.size(); ++i) {
    if (!(prevalence[i] >= 0.0 && prevalence[i] <= 1.0)) {
      throw ValidationError("prevalence of code " + std::to_string(i + 1) +
                            " outside [0, 1]");
    }
  }
  for (const auto& p : pairs) {
    if (p.given < 1 || p.given > kIcd9CodeCount || p.target < 1 ||
        p.target > kIcd9CodeCount) {
      throw ValidationError("comorbidity pair references an invalid position");
    }
    if (!(p.lift >= 0.0) || !std::isfinite(p.lift)) {
      throw ValidationError("comorbidity lift must be finite and >= 0");
    }
  }
}

SynthEhrModel parse_ehr_model(std::string_view text) {
  SynthEhrModel model;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    for (auto f : split(line, ' ')) {
      if (!trim(f).empty()) fields.push_back(trim(f));
    }
    try {
      const auto position = [&](std::string_view f) {
        const auto v = parse_uint(f);
        if (v < 1 || v > static_cast<std::uint64_t>(kIcd9CodeCount)) {
          throw ValidationError("position " + std::string(f) + " outside [1, 1071]");
        }
        return static_cast<int>(v);
      };
      if (fields[0] == "default" && fields.size() == 2) {
        std::fill(model.prevalence.begin(), model.prevalence.end(),
                  parse_double(fields[1]));
      } else if (fields[0] == "code" && fields.size() == 3) {
        model.prevalence[static_cast<std::size_t>(position(fields[1]) - 1)] =
            parse_double(fields[2]);
      } else if (fields[0] == "pair" && fields.size() == 4) {
        model.pairs.push_back(
            {position(fields[1]), position(fields[2]), parse_double(fields[3])});
      } else {
        throw FormatError("unrecognised directive '" + std::string(line) + "'");
      }
    } catch (const Error& e) {
      throw ConfigError(std::string("EHR model: ") + e.what(), line_no);
    }
  }
  try {
    model.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("EHR model: ") + e.what());
  }
  return model;
}

SynthEhrModel load_ehr_model(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_ehr_model(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                          bytes.size()));
}

std::vector<EhrRecord> synthesize_ehr(const SynthEhrModel& model, std::size_t n,
                                      RngStream& rng) {
  model.validate();
  std::vector<EhrRecord> records;
  records.reserve(n);
  std::vector<double> u(kIcd9CodeCount);
  for (std::size_t r = 0; r < n; ++r) {
    for (double& v : u) v = rng.uniform();
    std::vector<std::uint8_t> base(kIcd9CodeCount, 0);
    for (std::size_t c = 0; c < base.size(); ++c) {
      base[c] = u[c] < model.prevalence[c] ? 1 : 0;
    }
    std::vector<std::uint8_t> bits = base;
    for (const auto& pair : model.pairs) {
      if (!base[static_cast<std::size_t>(pair.given - 1)]) continue;
      const auto t = static_cast<std::size_t>(pair.target - 1);
      const double rate = std::min(1.0, pair.lift * model.prevalence[t]);
      bits[t] = u[t] < rate ? 1 : 0;
    }
    records.emplace_back(std::move(bits));
  }
  return records;
}

void write_ehr_csv(std::ostream& out, std::span<const EhrRecord> records) {
  for (int c = 1; c <= kIcd9CodeCount; ++c) {
    out << c << (c == kIcd9CodeCount ? '\n' : ',');
  }
  std::string line;
  for (const auto& rec : records) {
    line.clear();
    for (std::size_t c = 0; c < rec.bits().size(); ++c) {
      line += rec.bits()[c] ? '1' : '0';
      line += c + 1 == rec.bits().size() ? '\n' : ',';
    }
    out << line;
  }
}

std::vector<EhrRecord> read_ehr_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("EHR CSV: missing header");
  const auto header = split(trim(line), ',');
  if (header.size() != static_cast<std::size_t>(kIcd9CodeCount)) {
    throw FormatError("EHR CSV: header has " + std::to_string(header.size()) +
                      " columns, expected " + std::to_string(kIcd9CodeCount));
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (parse_uint(header[c]) != c + 1) {
      throw FormatError("EHR CSV: header column " + std::to_string(c + 1) +
                        " is '" + std::string(header[c]) + "'");
    }
  }
  std::vector<EhrRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != static_cast<std::size_t>(kIcd9CodeCount)) {
      throw FormatError("EHR CSV: row " + std::to_string(row) + " has " +
                        std::to_string(fields.size()) + " columns");
    }
    std::vector<std::uint8_t> bits(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c] == "1") {
        bits[c] = 1;
      } else if (fields[c] != "0") {
        throw FormatError("EHR CSV: row " + std::to_string(row) +
                          " holds a non-binary value");
      }
    }
    records.emplace_back(std::move(bits));
  }
  return records;
}

Matrix ehr_to_matrix(std::span<const EhrRecord> records) {
  Matrix m(records.size(), kIcd9CodeCount);
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t c = 0; c < static_cast<std::size_t>(kIcd9CodeCount); ++c) {
      m(r, c) = records[r].bits()[c] ? 1.0 : -1.0;
    }
  }
  return m;
}

}  // namespace dpwgan
