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

// Link model and awareness buffer. Bandwidth is in megabytes per second and
// volumes are counted in value slots of `bits_per_value` bits each.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "adapcomfl/error.hpp"

namespace adapcomfl::bw {

inline constexpr double kBitsPerMegabyte = 8.0e6;

inline double rate_bits_per_second(double mbps) { return mbps * kBitsPerMegabyte; }

struct LinkModel {
  double deadline_s = 0.5;
  double snr = 3.0;
  std::uint32_t bits_per_value = 32;

  double spectral_factor() const { return std::log2(1.0 + snr); }

  friend bool operator==(const LinkModel&, const LinkModel&) = default;

  void validate() const {
    if (!(deadline_s > 0.0)) throw InvalidArgument("link deadline must be positive");
    if (!(snr >= 0.0)) throw InvalidArgument("link snr must be non-negative");
    if (bits_per_value == 0) throw InvalidArgument("bits_per_value must be positive");
  }
};

/// Seconds to push `slots` values over a link running at `b_true` MB/s.
/// A dead link (zero bandwidth or zero snr) takes forever; an empty upload
/// takes no time.
inline double uplink_time(const LinkModel& link, std::uint64_t slots, double b_true) {
  if (slots == 0) return 0.0;
  const double capacity = rate_bits_per_second(b_true) * link.spectral_factor();
  if (!(capacity > 0.0)) return std::numeric_limits<double>::infinity();
  return static_cast<double>(slots) * link.bits_per_value / capacity;
}

/// Value slots that fit in one deadline at the predicted bandwidth,
/// floor(T * rate * log2(1 + snr) / bits_per_value).
///
/// The result is trimmed so that uplink_time(link, D, b_pred) <= T holds in
/// floating point too; with monotone rounding that extends to any
/// b_true >= b_pred.
inline std::uint64_t uplink_volume(const LinkModel& link, double b_pred) {
  if (!(b_pred >= 0.0)) throw InvalidArgument("predicted bandwidth must be non-negative");
  const double bits = link.deadline_s * rate_bits_per_second(b_pred) * link.spectral_factor();
  const double slots = std::floor(bits / link.bits_per_value);
  if (!(slots > 0.0)) return 0;
  if (slots >= 0x1.0p63) return std::uint64_t{1} << 63;
  auto volume = static_cast<std::uint64_t>(slots);
  while (volume > 0 && uplink_time(link, volume, b_pred) > link.deadline_s) --volume;
  return volume;
}

/// Mean absolute error between two equal-length sequences.
inline double mae(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.empty() || predicted.size() != actual.size()) {
    throw InvalidArgument("mae needs two non-empty sequences of equal length");
  }
  double total = 0.0;
  for (std::size_t q = 0; q < predicted.size(); ++q) {
    total += std::fabs(predicted[q] - actual[q]);
  }
  return total / static_cast<double>(predicted.size());
}

/// Sliding window of the most recent `capacity` bandwidth samples.
class AwarenessBuffer {
 public:
  explicit AwarenessBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidArgument("awareness buffer capacity must be positive");
    window_.reserve(capacity);
  }

  AwarenessBuffer(std::size_t capacity, std::span<const double> initial)
      : AwarenessBuffer(capacity) {
    for (double x : initial) observe(x);
  }

  void observe(double sample) {
    if (!(sample >= 0.0) || !std::isfinite(sample)) {
      throw InvalidArgument("bandwidth sample must be finite and non-negative");
    }
    if (window_.size() == capacity_) window_.erase(window_.begin());
    window_.push_back(sample);
  }

  std::span<const double> values() const noexcept { return window_; }
  std::size_t size() const noexcept { return window_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return window_.empty(); }

  friend bool operator==(const AwarenessBuffer&, const AwarenessBuffer&) = default;

 private:
  std::size_t capacity_;
  std::vector<double> window_;
};

}  // namespace adapcomfl::bw
