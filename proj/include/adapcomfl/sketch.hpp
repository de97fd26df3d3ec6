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

// Elastic-row count sketch without sign hashing. Collisions inside a bucket
// are resolved by a coefficient-of-variation rule instead of summation, and
// decompression takes the median across rows.
//
// Indices are 0-based throughout: rows u in [0, max_rows), keys k in [0, n),
// columns v in [0, b).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adapcomfl/error.hpp"
#include "adapcomfl/rng.hpp"

namespace adapcomfl::sketch {

/// Row-indexed hash functions h_u : [0, n) -> [0, b), shared by every party.
///
/// The mapping is materialized once at construction, so `position` is a table
/// lookup. Seeded families use a multiply-add-shift hash per row with a
/// sub-seed derived from (seed, u); pinned families take an explicit table and
/// exist for fixtures.
class HashFamily {
 public:
  static HashFamily seeded(std::uint64_t seed, std::size_t n, std::size_t columns,
                           std::size_t max_rows) {
    check_dims(n, columns, max_rows);
    HashFamily family(seed, n, columns, max_rows);
    for (std::size_t u = 0; u < max_rows; ++u) {
      const std::uint64_t row_seed = derive_seed(seed, u);
      const std::uint64_t multiplier = mix64(row_seed) | 1ULL;
      const std::uint64_t offset = mix64(row_seed ^ 0x5851f42d4c957f2dULL);
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t x = multiplier * (static_cast<std::uint64_t>(k) + 1) + offset;
        family.table_[u * n + k] = static_cast<std::uint32_t>(
            (static_cast<unsigned __int128>(x) * columns) >> 64);
      }
    }
    return family;
  }

  /// Family with explicit per-row tables; `rows[u][k]` is h_u(k).
  static HashFamily pinned(std::uint64_t seed, std::size_t columns,
                           const std::vector<std::vector<std::uint32_t>>& rows) {
    if (rows.empty()) throw InvalidArgument("pinned hash family needs at least one row");
    const std::size_t n = rows.front().size();
    check_dims(n, columns, rows.size());
    HashFamily family(seed, n, columns, rows.size());
    for (std::size_t u = 0; u < rows.size(); ++u) {
      if (rows[u].size() != n) throw InvalidArgument("pinned hash rows differ in length");
      for (std::size_t k = 0; k < n; ++k) {
        if (rows[u][k] >= columns) {
          throw InvalidArgument("pinned hash value out of column range");
        }
        family.table_[u * n + k] = rows[u][k];
      }
    }
    return family;
  }

  std::size_t position(std::size_t row, std::size_t key) const {
    if (row >= max_rows_) {
      throw InvalidArgument("hash row " + std::to_string(row) + " outside [0, " +
                            std::to_string(max_rows_) + ")");
    }
    if (key >= n_) {
      throw InvalidArgument("hash key " + std::to_string(key) + " outside [0, " +
                            std::to_string(n_) + ")");
    }
    return table_[row * n_ + key];
  }

  /// Column of every key for one row.
  std::span<const std::uint32_t> row(std::size_t u) const {
    if (u >= max_rows_) throw InvalidArgument("hash row out of range");
    return {table_.data() + u * n_, n_};
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t domain_size() const noexcept { return n_; }
  std::size_t columns() const noexcept { return columns_; }
  std::size_t max_rows() const noexcept { return max_rows_; }

  friend bool operator==(const HashFamily&, const HashFamily&) = default;

 private:
  HashFamily(std::uint64_t seed, std::size_t n, std::size_t columns, std::size_t max_rows)
      : seed_(seed), n_(n), columns_(columns), max_rows_(max_rows), table_(n * max_rows) {}

  static void check_dims(std::size_t n, std::size_t columns, std::size_t max_rows) {
    if (n == 0 || columns == 0 || max_rows == 0) {
      throw InvalidArgument("hash family dimensions must be positive");
    }
    if (columns > UINT32_MAX) throw InvalidArgument("too many sketch columns");
  }

  std::uint64_t seed_;
  std::size_t n_;
  std::size_t columns_;
  std::size_t max_rows_;
  std::vector<std::uint32_t> table_;
};

inline HashFamily make_hash_family(std::uint64_t seed, std::size_t n, std::size_t columns,
                                   std::size_t max_rows) {
  return HashFamily::seeded(seed, n, columns, max_rows);
}

struct CollisionPolicy {
  /// Buckets whose coefficient of variation is at most this are averaged.
  double cv_threshold = 0.5;

  void validate() const {
    if (!(cv_threshold >= 0.0)) throw InvalidArgument("cv_threshold must be >= 0");
  }
};

/// Dense row-major real matrix.
class CellMatrix {
 public:
  CellMatrix() = default;
  CellMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  double& operator()(std::size_t u, std::size_t v) { return data_[u * cols_ + v]; }
  double operator()(std::size_t u, std::size_t v) const { return data_[u * cols_ + v]; }

  std::span<double> row(std::size_t u) { return {data_.data() + u * cols_, cols_}; }
  std::span<const double> row(std::size_t u) const { return {data_.data() + u * cols_, cols_}; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Appends zero rows until there are `rows` of them.
  void pad_rows(std::size_t rows) {
    if (rows > rows_) {
      data_.resize(rows * cols_, 0.0);
      rows_ = rows;
    }
  }

  friend bool operator==(const CellMatrix&, const CellMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// One client's compressed gradient: an a_i x b matrix.
struct AdaptiveSketch {
  CellMatrix cells;
  std::uint64_t family_seed = 0;

  std::size_t rows() const noexcept { return cells.rows(); }
  std::size_t cols() const noexcept { return cells.cols(); }

  friend bool operator==(const AdaptiveSketch&, const AdaptiveSketch&) = default;
};

/// Server-side row-wise average of unequal-height sketches. `row_counts[u]`
/// is the number of clients that sent row u.
struct AggregatedSketch {
  CellMatrix cells;
  std::vector<std::uint32_t> row_counts;
  std::uint64_t family_seed = 0;

  std::size_t rows() const noexcept { return cells.rows(); }
  std::size_t cols() const noexcept { return cells.cols(); }

  /// Aggregate of a single sketch (every row count is 1).
  static AggregatedSketch of(const AdaptiveSketch& sketch) {
    return {sketch.cells, std::vector<std::uint32_t>(sketch.rows(), 1U), sketch.family_seed};
  }

  friend bool operator==(const AggregatedSketch&, const AggregatedSketch&) = default;
};

/// Collapses one collision bucket to a single value.
///
/// Mean when the population coefficient of variation sigma/|mean| is within
/// the threshold, otherwise the element of largest magnitude (sign kept; on a
/// magnitude tie the larger signed value wins). The comparison is done as
/// variance <= (threshold * mean)^2, so a zero mean with nonzero spread takes
/// the max branch and a constant bucket takes the mean branch.
inline double merge_bucket(std::span<const double> values, const CollisionPolicy& policy) {
  if (values.empty()) throw InvalidArgument("merge_bucket: empty bucket");
  if (values.size() == 1) return values.front();

  const auto count = static_cast<double>(values.size());
  double sum = 0.0;
  for (double x : values) sum += x;
  const double mean = sum / count;
  double sq = 0.0;
  for (double x : values) sq += (x - mean) * (x - mean);
  const double variance = sq / count;

  const double bound = policy.cv_threshold * mean;
  if (variance <= bound * bound) return mean;

  double best = values.front();
  for (double x : values.subspan(1)) {
    const double mag = std::fabs(x);
    const double best_mag = std::fabs(best);
    if (mag > best_mag || (mag == best_mag && x > best)) best = x;
  }
  return best;
}

/// Compresses `gradient` into a `rows` x b sketch using the first `rows` hash
/// functions of `family`. Empty buckets hold 0.
inline AdaptiveSketch compress(std::span<const double> gradient, std::size_t rows,
                               const HashFamily& family, const CollisionPolicy& policy) {
  const std::size_t n = family.domain_size();
  const std::size_t b = family.columns();
  if (gradient.size() != n) {
    throw InvalidArgument("compress: gradient length " + std::to_string(gradient.size()) +
                          " != hash domain " + std::to_string(n));
  }
  if (rows == 0 || rows > family.max_rows()) {
    throw InvalidArgument("compress: rows " + std::to_string(rows) + " outside [1, " +
                          std::to_string(family.max_rows()) + "]");
  }
  for (double g : gradient) {
    if (!std::isfinite(g)) throw InvalidArgument("compress: non-finite gradient entry");
  }

  AdaptiveSketch out{CellMatrix(rows, b), family.seed()};
  // Counting sort of keys by column gives each bucket as a contiguous run,
  // in ascending key order.
  std::vector<std::size_t> offsets(b + 1);
  std::vector<double> grouped(n);
  for (std::size_t u = 0; u < rows; ++u) {
    const auto hashes = family.row(u);
    std::fill(offsets.begin(), offsets.end(), 0);
    for (std::size_t k = 0; k < n; ++k) ++offsets[hashes[k] + 1];
    for (std::size_t v = 0; v < b; ++v) offsets[v + 1] += offsets[v];
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t k = 0; k < n; ++k) grouped[cursor[hashes[k]]++] = gradient[k];

    auto row = out.cells.row(u);
    for (std::size_t v = 0; v < b; ++v) {
      const std::size_t lo = offsets[v];
      const std::size_t hi = offsets[v + 1];
      row[v] = lo == hi ? 0.0
                        : merge_bucket(std::span<const double>(grouped).subspan(lo, hi - lo),
                                       policy);
    }
  }
  return out;
}

/// Median; an even count yields the mean of the two middle values.
/// Reorders `values`.
inline double median_inplace(std::span<double> values) {
  if (values.empty()) throw InvalidArgument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

/// Recovers an n-vector from an aggregated sketch: entry k is the median of
/// cells[u][h_u(k)] over all rows. Empty-bucket zeros take part in the median.
inline std::vector<double> decompress(const AggregatedSketch& agg, const HashFamily& family,
                                      std::size_t n) {
  if (n != family.domain_size()) {
    throw InvalidArgument("decompress: n does not match the hash family domain");
  }
  if (agg.cols() != family.columns()) {
    throw InvalidArgument("decompress: sketch columns do not match the hash family");
  }
  if (agg.rows() == 0 || agg.rows() > family.max_rows()) {
    throw InvalidArgument("decompress: sketch row count outside the hash family range");
  }
  if (agg.family_seed != family.seed()) {
    throw InvalidArgument("decompress: sketch was built with a different hash family");
  }
  std::vector<double> out(n);
  std::vector<double> column(agg.rows());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t u = 0; u < agg.rows(); ++u) {
      column[u] = agg.cells(u, family.row(u)[k]);
    }
    out[k] = median_inplace(column);
  }
  return out;
}

/// Sketch height for a volume budget of `volume` value slots:
/// clamp(floor(volume / columns), row_min, row_max).
inline std::size_t rows_for_volume(std::uint64_t volume, std::size_t columns,
                                   std::size_t row_min, std::size_t row_max) {
  if (columns == 0) throw InvalidArgument("rows_for_volume: columns must be positive");
  if (row_min == 0 || row_min > row_max) {
    throw InvalidArgument("rows_for_volume: need 1 <= row_min <= row_max");
  }
  const std::uint64_t raw = volume / columns;
  return static_cast<std::size_t>(std::clamp<std::uint64_t>(raw, row_min, row_max));
}

}  // namespace adapcomfl::sketch
