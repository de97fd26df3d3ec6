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

// Small stacked LSTM regressor for next-sample bandwidth prediction, trained
// with full backpropagation through time.
//
// Each layer computes
//   i = sigmoid(W_i x + U_i h + b_i)   f = sigmoid(W_f x + U_f h + b_f)
//   o = sigmoid(W_o x + U_o h + b_o)   g = tanh(W_g x + U_g h)
//   c = f * c_prev + i * g             h = o * tanh(c)
// and the scalar output is w_out . h_last of the top layer. The candidate g
// and the output layer carry no bias, so an all-zero input sequence maps to
// exactly zero.
//
// Flat parameter layout, layer by layer: W (4H x in, gate rows i,f,o,g,
// row-major), U (4H x H), b (3H, gates i,f,o); then w_out (H_top).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adapcomfl/error.hpp"
#include "adapcomfl/rng.hpp"

namespace adapcomfl::bw {

struct LstmWindow {
  std::vector<double> inputs;
  double target = 0.0;
};

class MiniLstm {
 public:
  MiniLstm(std::vector<std::size_t> hidden, std::uint64_t seed) {
    if (hidden.empty()) throw InvalidArgument("LSTM needs at least one hidden layer");
    std::size_t offset = 0;
    std::size_t in = 1;
    for (std::size_t h : hidden) {
      if (h == 0) throw InvalidArgument("LSTM hidden layer size must be positive");
      Layer layer{in, h, offset, 0, 0};
      layer.u_off = layer.w_off + 4 * h * in;
      layer.b_off = layer.u_off + 4 * h * h;
      offset = layer.b_off + 3 * h;
      layers_.push_back(layer);
      in = h;
    }
    out_off_ = offset;
    params_.assign(offset + in, 0.0);

    Rng rng(seed);
    for (const auto& layer : layers_) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(layer.hidden));
      for (std::size_t p = layer.w_off; p < layer.b_off; ++p) params_[p] = rng.uniform(-scale, scale);
      for (std::size_t j = 0; j < layer.hidden; ++j) params_[layer.b_off + layer.hidden + j] = 1.0;
    }
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t p = out_off_; p < params_.size(); ++p) params_[p] = rng.uniform(-out_scale, out_scale);
  }

  double forward(std::span<const double> sequence) const {
    std::vector<Cache> cache;
    return run(sequence, cache);
  }

  /// Mean squared error over `windows`; writes its gradient into `grad`.
  double loss_and_grad(std::span<const LstmWindow> windows, std::span<double> grad) const {
    if (grad.size() != params_.size()) throw InvalidArgument("LSTM gradient buffer has wrong size");
    if (windows.empty()) throw InvalidArgument("LSTM loss over zero windows");
    std::fill(grad.begin(), grad.end(), 0.0);
    const double scale = 1.0 / static_cast<double>(windows.size());
    double loss = 0.0;
    std::vector<Cache> cache;
    for (const auto& w : windows) {
      const double err = run(w.inputs, cache) - w.target;
      loss += err * err * scale;
      backward(w.inputs, cache, 2.0 * err * scale, grad);
    }
    return loss;
  }

  double loss(std::span<const LstmWindow> windows) const {
    if (windows.empty()) throw InvalidArgument("LSTM loss over zero windows");
    double total = 0.0;
    for (const auto& w : windows) {
      const double err = forward(w.inputs) - w.target;
      total += err * err;
    }
    return total / static_cast<double>(windows.size());
  }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  friend bool operator==(const MiniLstm& l, const MiniLstm& r) { return l.params_ == r.params_; }

 private:
  struct Layer {
    std::size_t in;
    std::size_t hidden;
    std::size_t w_off;
    std::size_t u_off;
    std::size_t b_off;
  };

  struct Cache {
    std::vector<double> i, f, o, g, c, tc, h;  // T x H each
  };

  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  double run(std::span<const double> seq, std::vector<Cache>& cache) const {
    if (seq.empty()) throw InvalidArgument("LSTM input sequence is empty");
    const std::size_t steps = seq.size();
    cache.resize(layers_.size());
    std::vector<double> pre;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      const std::size_t H = L.hidden;
      auto& C = cache[l];
      for (auto* v : {&C.i, &C.f, &C.o, &C.g, &C.c, &C.tc, &C.h}) v->assign(steps * H, 0.0);
      pre.assign(4 * H, 0.0);
      for (std::size_t t = 0; t < steps; ++t) {
        const double* x = l == 0 ? &seq[t] : &cache[l - 1].h[t * L.in];
        for (std::size_t r = 0; r < 4 * H; ++r) {
          double acc = r < 3 * H ? params_[L.b_off + r] : 0.0;
          const double* w = &params_[L.w_off + r * L.in];
          for (std::size_t k = 0; k < L.in; ++k) acc += w[k] * x[k];
          if (t > 0) {
            const double* u = &params_[L.u_off + r * H];
            const double* h_prev = &C.h[(t - 1) * H];
            for (std::size_t k = 0; k < H; ++k) acc += u[k] * h_prev[k];
          }
          pre[r] = acc;
        }
        for (std::size_t j = 0; j < H; ++j) {
          const std::size_t at = t * H + j;
          C.i[at] = sigmoid(pre[j]);
          C.f[at] = sigmoid(pre[H + j]);
          C.o[at] = sigmoid(pre[2 * H + j]);
          C.g[at] = std::tanh(pre[3 * H + j]);
          const double c_prev = t > 0 ? C.c[at - H] : 0.0;
          C.c[at] = C.f[at] * c_prev + C.i[at] * C.g[at];
          C.tc[at] = std::tanh(C.c[at]);
          C.h[at] = C.o[at] * C.tc[at];
        }
      }
    }
    const auto& top = cache.back().h;
    const std::size_t H = layers_.back().hidden;
    double y = 0.0;
    for (std::size_t j = 0; j < H; ++j) y += params_[out_off_ + j] * top[(steps - 1) * H + j];
    return y;
  }

  void backward(std::span<const double> seq, const std::vector<Cache>& cache, double dy,
                std::span<double> grad) const {
    const std::size_t steps = seq.size();
    const std::size_t H_top = layers_.back().hidden;
    std::vector<double> dh_above(steps * H_top, 0.0);
    for (std::size_t j = 0; j < H_top; ++j) {
      grad[out_off_ + j] += dy * cache.back().h[(steps - 1) * H_top + j];
      dh_above[(steps - 1) * H_top + j] = dy * params_[out_off_ + j];
    }

    std::vector<double> dpre, dh_next, dc_next, dh_rec, dx;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& L = layers_[l];
      const std::size_t H = L.hidden;
      const auto& C = cache[l];
      dpre.assign(4 * H, 0.0);
      dh_next.assign(H, 0.0);
      dc_next.assign(H, 0.0);
      dx.assign(steps * L.in, 0.0);
      for (std::size_t t = steps; t-- > 0;) {
        for (std::size_t j = 0; j < H; ++j) {
          const std::size_t at = t * H + j;
          const double dh = dh_above[at] + dh_next[j];
          const double dc = dc_next[j] + dh * C.o[at] * (1.0 - C.tc[at] * C.tc[at]);
          const double c_prev = t > 0 ? C.c[at - H] : 0.0;
          dpre[j] = dc * C.g[at] * C.i[at] * (1.0 - C.i[at]);
          dpre[H + j] = dc * c_prev * C.f[at] * (1.0 - C.f[at]);
          dpre[2 * H + j] = dh * C.tc[at] * C.o[at] * (1.0 - C.o[at]);
          dpre[3 * H + j] = dc * C.i[at] * (1.0 - C.g[at] * C.g[at]);
          dc_next[j] = dc * C.f[at];
        }
        const double* x = l == 0 ? &seq[t] : &cache[l - 1].h[t * L.in];
        const double* h_prev = t > 0 ? &C.h[(t - 1) * H] : nullptr;
        dh_rec.assign(H, 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
          const double d = dpre[r];
          if (d == 0.0) continue;
          for (std::size_t k = 0; k < L.in; ++k) {
            grad[L.w_off + r * L.in + k] += d * x[k];
            dx[t * L.in + k] += params_[L.w_off + r * L.in + k] * d;
          }
          if (h_prev != nullptr) {
            for (std::size_t k = 0; k < H; ++k) {
              grad[L.u_off + r * H + k] += d * h_prev[k];
              dh_rec[k] += params_[L.u_off + r * H + k] * d;
            }
          }
          if (r < 3 * H) grad[L.b_off + r] += d;
        }
        dh_next.swap(dh_rec);
      }
      dh_above.swap(dx);
    }
  }

  std::vector<Layer> layers_;
  std::size_t out_off_ = 0;
  std::vector<double> params_;
};

}  // namespace adapcomfl::bw
