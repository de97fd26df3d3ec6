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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adapcomfl/bandwidth.hpp"
#include "adapcomfl/error.hpp"
#include "adapcomfl/lstm.hpp"

namespace adapcomfl::bw {

enum class PredictorKind { last_value, window_ar, mini_lstm };

inline std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::last_value: return "last_value";
    case PredictorKind::window_ar: return "window_ar";
    case PredictorKind::mini_lstm: return "mini_lstm";
  }
  return "unknown";
}

inline std::optional<PredictorKind> predictor_kind_from_string(std::string_view name) {
  if (name == "last_value") return PredictorKind::last_value;
  if (name == "window_ar") return PredictorKind::window_ar;
  if (name == "mini_lstm") return PredictorKind::mini_lstm;
  return std::nullopt;
}

/// Per-client predictor. Only `mini_lstm` carries trainable weights.
struct PredictorState {
  PredictorKind kind = PredictorKind::last_value;
  std::size_t sequence_length = 6;
  std::optional<MiniLstm> lstm;

  friend bool operator==(const PredictorState&, const PredictorState&) = default;
};

inline PredictorState make_predictor(PredictorKind kind, std::size_t sequence_length = 6,
                                     std::vector<std::size_t> hidden = {16, 8},
                                     std::uint64_t seed = 0) {
  if (sequence_length == 0) throw InvalidArgument("predictor sequence length must be positive");
  PredictorState state{kind, sequence_length, std::nullopt};
  if (kind == PredictorKind::mini_lstm) state.lstm.emplace(std::move(hidden), seed);
  return state;
}

namespace detail {

inline constexpr double kMinWindowScale = 1e-9;

/// Window inputs relative to its last sample, scaled by the window mean.
struct Normalized {
  std::vector<double> inputs;
  double last = 0.0;
  double scale = 1.0;
};

inline Normalized normalize_window(std::span<const double> window) {
  Normalized out;
  out.last = window.back();
  double mean = 0.0;
  for (double x : window) mean += x;
  mean /= static_cast<double>(window.size());
  out.scale = std::max(mean, kMinWindowScale);
  out.inputs.reserve(window.size());
  for (double x : window) out.inputs.push_back((x - out.last) / out.scale);
  return out;
}

/// Ordinary least-squares line through (0, y0) ... (m-1, y_{m-1}),
/// evaluated at x = m.
inline double extrapolate_line(std::span<const double> ys) {
  const auto m = static_cast<double>(ys.size());
  if (ys.size() == 1) return ys.front();
  const double x_mean = (m - 1.0) / 2.0;
  double y_mean = 0.0;
  for (double y : ys) y_mean += y;
  y_mean /= m;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (ys[i] - y_mean);
    sxx += dx * dx;
  }
  return y_mean + (sxy / sxx) * (m - x_mean);
}

}  // namespace detail

/// Training windows over a series: inputs are `f` consecutive samples and
/// the label is the sample that follows, all normalized like at prediction.
inline std::vector<LstmWindow> make_windows(std::span<const double> series, std::size_t f) {
  std::vector<LstmWindow> windows;
  if (series.size() <= f) return windows;
  for (std::size_t j = 0; j + f < series.size(); ++j) {
    auto norm = detail::normalize_window(series.subspan(j, f));
    windows.push_back({std::move(norm.inputs), (series[j + f] - norm.last) / norm.scale});
  }
  return windows;
}

/// Next-sample bandwidth from the buffer; negative outputs are clamped to 0.
inline double predict(const PredictorState& state, std::span<const double> history) {
  const std::size_t need = state.kind == PredictorKind::last_value ? 1 : state.sequence_length;
  if (history.size() < need) {
    throw InsufficientData("predictor needs " + std::to_string(need) + " samples, buffer has " +
                           std::to_string(history.size()));
  }
  const auto window = history.last(need);
  double raw = 0.0;
  switch (state.kind) {
    case PredictorKind::last_value:
      raw = window.back();
      break;
    case PredictorKind::window_ar:
      raw = detail::extrapolate_line(window);
      break;
    case PredictorKind::mini_lstm: {
      if (!state.lstm) throw InvalidArgument("mini_lstm predictor has no network");
      const auto norm = detail::normalize_window(window);
      raw = norm.last + norm.scale * state.lstm->forward(norm.inputs);
      break;
    }
  }
  return std::max(0.0, raw);
}

inline double predict(const PredictorState& state, const AwarenessBuffer& buffer) {
  return predict(state, buffer.values());
}

/// Mean squared error of the network over every window in the buffer.
inline double training_loss(const PredictorState& state, const AwarenessBuffer& buffer) {
  if (!state.lstm) throw InvalidArgument("training_loss needs a mini_lstm predictor");
  const auto windows = make_windows(buffer.values(), state.sequence_length);
  if (windows.empty()) throw InsufficientData("buffer too short for one training window");
  return state.lstm->loss(windows);
}

inline constexpr double kLstmGradientClip = 1.0;

/// Full-batch gradient descent on all sliding windows of the buffer, one
/// step per epoch. The gradient is clipped to unit L2 norm.
inline PredictorState train_mini_lstm(PredictorState state, const AwarenessBuffer& buffer,
                                      std::size_t epochs, double lr) {
  if (state.kind != PredictorKind::mini_lstm || !state.lstm) {
    throw InvalidArgument("train_mini_lstm on a predictor without a network");
  }
  if (!(lr > 0.0)) throw InvalidArgument("LSTM learning rate must be positive");
  if (buffer.size() < state.sequence_length + 1) {
    throw InsufficientData("LSTM training needs " + std::to_string(state.sequence_length + 1) +
                           " samples, buffer has " + std::to_string(buffer.size()));
  }
  if (epochs == 0) return state;
  const auto windows = make_windows(buffer.values(), state.sequence_length);
  auto& net = *state.lstm;
  std::vector<double> grad(net.parameter_count());
  for (std::size_t e = 0; e < epochs; ++e) {
    net.loss_and_grad(windows, grad);
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    norm = std::sqrt(norm);
    const double step = norm > kLstmGradientClip ? lr * kLstmGradientClip / norm : lr;
    auto params = net.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) params[p] -= step * grad[p];
  }
  return state;
}

}  // namespace adapcomfl::bw
