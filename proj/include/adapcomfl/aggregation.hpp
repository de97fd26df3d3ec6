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

// Server side of the sketch protocol: zero-pad unequal sketches to the
// tallest one and average each row over the clients that actually sent it.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "adapcomfl/error.hpp"
#include "adapcomfl/sketch.hpp"

namespace adapcomfl::fl {

using ClientId = std::uint32_t;

/// What a client puts on the wire each round. The row count travels with the
/// cells so the server never has to infer it from zero rows.
struct SketchUpload {
  ClientId client_id = 0;
  sketch::AdaptiveSketch sketch;
};

struct Alignment {
  std::vector<sketch::CellMatrix> padded;
  std::size_t max_rows = 0;
  std::vector<std::uint32_t> row_counts;
};

namespace detail {

inline void check_compatible(std::span<const sketch::AdaptiveSketch* const> sketches) {
  if (sketches.empty()) throw InvalidArgument("no sketches to aggregate");
  const auto& first = *sketches.front();
  for (const auto* s : sketches) {
    if (s->rows() == 0) throw IncompatibleSketch("sketch with zero rows");
    if (s->cols() != first.cols()) throw IncompatibleSketch("sketches differ in column count");
    if (s->family_seed != first.family_seed) {
      throw IncompatibleSketch("sketches use different hash families");
    }
  }
}

inline std::vector<std::uint32_t> row_counts(
    std::span<const sketch::AdaptiveSketch* const> sketches, std::size_t max_rows) {
  std::vector<std::uint32_t> counts(max_rows, 0);
  for (const auto* s : sketches) {
    for (std::size_t u = 0; u < s->rows(); ++u) ++counts[u];
  }
  return counts;
}

inline std::size_t tallest(std::span<const sketch::AdaptiveSketch* const> sketches) {
  std::size_t a_max = 0;
  for (const auto* s : sketches) a_max = std::max(a_max, s->rows());
  return a_max;
}

inline sketch::AggregatedSketch aggregate_ordered(
    std::span<const sketch::AdaptiveSketch* const> sketches) {
  check_compatible(sketches);
  const std::size_t a_max = tallest(sketches);
  const std::size_t b = sketches.front()->cols();
  sketch::AggregatedSketch agg{sketch::CellMatrix(a_max, b), row_counts(sketches, a_max),
                               sketches.front()->family_seed};
  for (const auto* s : sketches) {
    for (std::size_t u = 0; u < s->rows(); ++u) {
      auto dst = agg.cells.row(u);
      const auto src = s->cells.row(u);
      for (std::size_t v = 0; v < b; ++v) dst[v] += src[v];
    }
  }
  for (std::size_t u = 0; u < a_max; ++u) {
    const auto count = static_cast<double>(agg.row_counts[u]);
    for (double& cell : agg.cells.row(u)) cell /= count;
  }
  return agg;
}

inline std::vector<const sketch::AdaptiveSketch*> by_client(std::span<const SketchUpload> uploads) {
  std::vector<const SketchUpload*> order;
  order.reserve(uploads.size());
  for (const auto& up : uploads) order.push_back(&up);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* l, const auto* r) { return l->client_id < r->client_id; });
  std::vector<const sketch::AdaptiveSketch*> out;
  out.reserve(order.size());
  for (const auto* up : order) out.push_back(&up->sketch);
  return out;
}

}  // namespace detail

/// Pads every sketch with zero rows to the tallest height and counts, per row,
/// how many sketches originally had it.
inline Alignment align(std::span<const sketch::AdaptiveSketch> sketches) {
  std::vector<const sketch::AdaptiveSketch*> ptrs;
  for (const auto& s : sketches) ptrs.push_back(&s);
  detail::check_compatible(ptrs);
  Alignment out;
  out.max_rows = detail::tallest(ptrs);
  out.row_counts = detail::row_counts(ptrs, out.max_rows);
  for (const auto& s : sketches) {
    auto padded = s.cells;
    padded.pad_rows(out.max_rows);
    out.padded.push_back(std::move(padded));
  }
  return out;
}

/// Row-wise average in list order.
inline sketch::AggregatedSketch aggregate(std::span<const sketch::AdaptiveSketch> sketches) {
  std::vector<const sketch::AdaptiveSketch*> ptrs;
  for (const auto& s : sketches) ptrs.push_back(&s);
  return detail::aggregate_ordered(ptrs);
}

/// Row-wise average summed in ascending client id order, so the result is
/// bitwise independent of arrival order.
inline sketch::AggregatedSketch aggregate(std::span<const SketchUpload> uploads) {
  return detail::aggregate_ordered(detail::by_client(uploads));
}

}  // namespace adapcomfl::fl
