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
// Locale-independent number formatting shared by every text output.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dpwgan {

// Shortest representation that parses back to the identical double.
// Infinities print as "inf" / "-inf".
std::string format_double(double v);

// Fixed-point with `digits` decimals, always '.' as separator.
std::string format_fixed(double v, int digits);

// Accepts everything format_double emits. Throws FormatError otherwise.
double parse_double(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ull);

}  // namespace dpwgan
