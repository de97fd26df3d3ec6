// Copyright 2026 The AdapComFL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Binary sketch dump, version 1. All integers little-endian.
//
//   offset  size  field
//   0       4     magic "ACSK"
//   4       4     u32 format version (1)
//   8       8     u64 hash family seed
//   16      4     u32 rows (a)
//   20      4     u32 columns (b)
//   24      8*a*b f64 cells, IEEE-754 binary64, row-major

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adapcomfl/error.hpp"
#include "adapcomfl/sketch.hpp"

namespace adapcomfl::sketch {

inline constexpr std::array<char, 4> kSketchMagic{'A', 'C', 'S', 'K'};
inline constexpr std::uint32_t kSketchFormatVersion = 1;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  auto bits = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>(bits & 0xFF));
    bits >>= 8;
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) bits = (bits << 8) | p[i];
  return static_cast<T>(bits);
}

}  // namespace detail

inline std::vector<unsigned char> encode_sketch(const AdaptiveSketch& sketch) {
  std::vector<unsigned char> out;
  out.reserve(24 + 8 * sketch.cells.data().size());
  out.insert(out.end(), kSketchMagic.begin(), kSketchMagic.end());
  detail::put_le<std::uint32_t>(out, kSketchFormatVersion);
  detail::put_le<std::uint64_t>(out, sketch.family_seed);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sketch.rows()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sketch.cols()));
  for (double cell : sketch.cells.data()) {
    detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(cell));
  }
  return out;
}

inline AdaptiveSketch decode_sketch(std::span<const unsigned char> bytes) {
  if (bytes.size() < 24) throw ParseError("sketch dump truncated in header");
  if (!std::equal(kSketchMagic.begin(), kSketchMagic.end(), bytes.begin())) {
    throw ParseError("sketch dump has bad magic");
  }
  const auto* p = bytes.data();
  const auto version = detail::get_le<std::uint32_t>(p + 4);
  if (version != kSketchFormatVersion) {
    throw ParseError("unsupported sketch dump version " + std::to_string(version));
  }
  const auto seed = detail::get_le<std::uint64_t>(p + 8);
  const auto rows = detail::get_le<std::uint32_t>(p + 16);
  const auto cols = detail::get_le<std::uint32_t>(p + 20);
  const std::uint64_t cells = static_cast<std::uint64_t>(rows) * cols;
  if (bytes.size() != 24 + 8 * cells) throw ParseError("sketch dump size does not match header");

  AdaptiveSketch sketch{CellMatrix(rows, cols), seed};
  auto data = sketch.cells.data();
  for (std::uint64_t i = 0; i < cells; ++i) {
    data[i] = std::bit_cast<double>(detail::get_le<std::uint64_t>(p + 24 + 8 * i));
  }
  return sketch;
}

inline void write_sketch(std::ostream& os, const AdaptiveSketch& sketch) {
  const auto bytes = encode_sketch(sketch);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline AdaptiveSketch read_sketch(std::istream& is) {
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  return decode_sketch(bytes);
}

}  // namespace adapcomfl::sketch
