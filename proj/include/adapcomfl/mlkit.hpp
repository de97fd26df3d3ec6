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

// Desk-scale classifiers with exact gradients: multinomial logistic
// regression and a one-hidden-layer tanh MLP, trained with plain SGD.
//
// Parameters are one flat vector, laid out layer by layer with each weight
// matrix row-major (out x in) followed by its bias:
//   logistic: W (classes x dims), b (classes)
//   mlp:      W1 (hidden x dims), b1 (hidden), W2 (classes x hidden), b2 (classes)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adapcomfl/common.hpp"
#include "adapcomfl/error.hpp"
#include "adapcomfl/rng.hpp"

namespace adapcomfl::ml {

enum class ModelKind { logistic, mlp };

inline std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::logistic ? "logistic" : "mlp";
}

inline std::optional<ModelKind> model_kind_from_string(std::string_view name) {
  if (name == "logistic") return ModelKind::logistic;
  if (name == "mlp") return ModelKind::mlp;
  return std::nullopt;
}

struct Architecture {
  ModelKind kind = ModelKind::logistic;
  std::size_t input_dims = 0;
  std::size_t classes = 0;
  std::size_t hidden = 32;

  std::size_t parameter_count() const {
    if (kind == ModelKind::logistic) return classes * (input_dims + 1);
    return hidden * (input_dims + 1) + classes * (hidden + 1);
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ModelWeights {
  Architecture arch;
  std::vector<double> values;

  /// Logistic regression starts at zero; the MLP gets Xavier-uniform weights
  /// (biases zero) drawn from `seed`.
  static ModelWeights initial(const Architecture& arch, std::uint64_t seed) {
    if (arch.input_dims == 0 || arch.classes < 2) {
      throw InvalidArgument("model needs input_dims >= 1 and classes >= 2");
    }
    if (arch.kind == ModelKind::mlp && arch.hidden == 0) {
      throw InvalidArgument("mlp hidden width must be positive");
    }
    ModelWeights w{arch, std::vector<double>(arch.parameter_count(), 0.0)};
    if (arch.kind == ModelKind::mlp) {
      Rng rng(seed);
      const double s1 = std::sqrt(6.0 / static_cast<double>(arch.input_dims + arch.hidden));
      const double s2 = std::sqrt(6.0 / static_cast<double>(arch.hidden + arch.classes));
      const std::size_t w1 = arch.hidden * arch.input_dims;
      const std::size_t w2_off = w1 + arch.hidden;
      for (std::size_t p = 0; p < w1; ++p) w.values[p] = rng.uniform(-s1, s1);
      for (std::size_t p = 0; p < arch.classes * arch.hidden; ++p) {
        w.values[w2_off + p] = rng.uniform(-s2, s2);
      }
    }
    return w;
  }

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

struct Dataset {
  std::size_t dims = 0;
  std::size_t classes = 0;
  std::vector<double> features;  // samples x dims, row-major
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  std::span<const double> row(std::size_t i) const { return {features.data() + i * dims, dims}; }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out{dims, classes, {}, {}};
    out.features.reserve(indices.size() * dims);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
      const auto r = row(i);
      out.features.insert(out.features.end(), r.begin(), r.end());
      out.labels.push_back(labels[i]);
    }
    return out;
  }

  std::uint64_t fingerprint() const {
    Fnv1a h;
    h.update(&dims, sizeof(dims));
    h.update(&classes, sizeof(classes));
    h.update(features.data(), features.size() * sizeof(double));
    h.update(labels.data(), labels.size() * sizeof(std::uint32_t));
    return h.digest();
  }

  void validate() const {
    if (features.size() != labels.size() * dims) {
      throw InvalidArgument("dataset features and labels disagree in length");
    }
    for (auto y : labels) {
      if (y >= classes) throw InvalidArgument("dataset label out of class range");
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

namespace detail {

inline void check_compatible(const ModelWeights& w, const Dataset& data) {
  if (w.values.size() != w.arch.parameter_count()) {
    throw InvalidArgument("weight vector does not match its architecture");
  }
  if (data.dims != w.arch.input_dims || data.classes != w.arch.classes) {
    throw InvalidArgument("dataset shape does not match the model");
  }
}

/// Writes logits for `x` into `logits`; for the MLP also fills `hidden`.
inline void forward(const ModelWeights& w, std::span<const double> x, std::span<double> logits,
                    std::span<double> hidden) {
  const auto& a = w.arch;
  const double* p = w.values.data();
  std::span<const double> features = x;
  std::size_t in = a.input_dims;
  if (a.kind == ModelKind::mlp) {
    const double* b1 = p + a.hidden * in;
    for (std::size_t j = 0; j < a.hidden; ++j) {
      double acc = b1[j];
      for (std::size_t k = 0; k < in; ++k) acc += p[j * in + k] * x[k];
      hidden[j] = std::tanh(acc);
    }
    p = b1 + a.hidden;
    features = hidden;
    in = a.hidden;
  }
  const double* bias = p + a.classes * in;
  for (std::size_t c = 0; c < a.classes; ++c) {
    double acc = bias[c];
    for (std::size_t k = 0; k < in; ++k) acc += p[c * in + k] * features[k];
    logits[c] = acc;
  }
}

/// In-place softmax; returns log-sum-exp of the input.
inline double softmax(std::span<double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : z) v /= total;
  return peak + std::log(total);
}

}  // namespace detail

/// Mean softmax cross-entropy over `batch` and its gradient.
inline LossGrad loss_and_grad(const ModelWeights& w, const Dataset& batch) {
  detail::check_compatible(w, batch);
  if (batch.empty()) throw InvalidArgument("loss_and_grad on an empty batch");
  const auto& a = w.arch;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossGrad out{0.0, std::vector<double>(w.values.size(), 0.0)};
  std::vector<double> logits(a.classes), hidden(a.kind == ModelKind::mlp ? a.hidden : 0),
      dhidden(hidden.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = batch.row(i);
    const auto y = batch.labels[i];
    detail::forward(w, x, logits, hidden);
    const double z_y = logits[y];
    out.loss += (detail::softmax(logits) - z_y) * inv_n;
    logits[y] -= 1.0;  // now dL/dz for this sample (times n)

    double* g = out.grad.data();
    const double* p = w.values.data();
    if (a.kind == ModelKind::logistic) {
      const std::size_t in = a.input_dims;
      for (std::size_t c = 0; c < a.classes; ++c) {
        const double d = logits[c] * inv_n;
        for (std::size_t k = 0; k < in; ++k) g[c * in + k] += d * x[k];
        g[a.classes * in + c] += d;
      }
      continue;
    }

    const std::size_t in = a.input_dims;
    const std::size_t off2 = a.hidden * (in + 1);
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t c = 0; c < a.classes; ++c) {
      const double d = logits[c] * inv_n;
      for (std::size_t j = 0; j < a.hidden; ++j) {
        g[off2 + c * a.hidden + j] += d * hidden[j];
        dhidden[j] += p[off2 + c * a.hidden + j] * d;
      }
      g[off2 + a.classes * a.hidden + c] += d;
    }
    for (std::size_t j = 0; j < a.hidden; ++j) {
      const double d = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
      for (std::size_t k = 0; k < in; ++k) g[j * in + k] += d * x[k];
      g[a.hidden * in + j] += d;
    }
  }
  return out;
}

/// w - lr * grad.
inline ModelWeights sgd_step(ModelWeights w, std::span<const double> grad, double lr) {
  if (grad.size() != w.values.size()) throw InvalidArgument("sgd_step: gradient shape mismatch");
  for (std::size_t p = 0; p < grad.size(); ++p) w.values[p] -= lr * grad[p];
  return w;
}

/// Argmax class; ties go to the lowest index.
inline std::uint32_t predict_class(const ModelWeights& w, std::span<const double> x) {
  std::vector<double> logits(w.arch.classes);
  std::vector<double> hidden(w.arch.kind == ModelKind::mlp ? w.arch.hidden : 0);
  detail::forward(w, x, logits, hidden);
  return static_cast<std::uint32_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

/// Percentage of correctly classified samples, in [0, 100].
inline double evaluate(const ModelWeights& w, const Dataset& test) {
  detail::check_compatible(w, test);
  if (test.empty()) throw InvalidArgument("evaluate on an empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predict_class(w, test.row(i)) == test.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

/// Local training: `epochs` passes of minibatch SGD over a shuffled copy of
/// `data`. batch_size 0 means full batch.
inline ModelWeights train_local(ModelWeights w, const Dataset& data, std::size_t epochs,
                                std::size_t batch_size, double lr, Rng& rng) {
  if (data.empty()) throw InvalidArgument("train_local on an empty dataset");
  const std::size_t bs = batch_size == 0 ? data.size() : std::min(batch_size, data.size());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < epochs; ++e) {
    if (bs < data.size()) rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t len = std::min(bs, order.size() - start);
      const auto batch = data.subset(std::span<const std::size_t>(order).subspan(start, len));
      const auto lg = loss_and_grad(w, batch);
      w = sgd_step(std::move(w), lg.grad, lr);
    }
  }
  return w;
}

/// Gaussian class clusters. Each class centre is `class_separation` times a
/// random unit vector; samples add unit-variance isotropic noise. Labels are
/// balanced to within one and the sample order is shuffled.
inline Dataset make_synthetic_dataset(std::uint64_t seed, std::size_t samples, std::size_t dims,
                                      std::size_t classes, double class_separation) {
  if (classes < 2) throw InvalidArgument("synthetic dataset needs at least 2 classes");
  if (dims == 0 || samples == 0) throw InvalidArgument("synthetic dataset needs dims, samples >= 1");
  Rng rng(seed);
  std::vector<double> centers(classes * dims);
  for (std::size_t c = 0; c < classes; ++c) {
    double norm = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      centers[c * dims + k] = rng.normal();
      norm += centers[c * dims + k] * centers[c * dims + k];
    }
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < dims; ++k) {
      centers[c * dims + k] *= norm > 0.0 ? class_separation / norm : 0.0;
    }
  }

  std::vector<std::uint32_t> labels(samples);
  for (std::size_t i = 0; i < samples; ++i) labels[i] = static_cast<std::uint32_t>(i % classes);
  rng.shuffle(labels.begin(), labels.end());

  Dataset data{dims, classes, std::vector<double>(samples * dims), std::move(labels)};
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t c = data.labels[i];
    for (std::size_t k = 0; k < dims; ++k) {
      data.features[i * dims + k] = centers[c * dims + k] + rng.normal();
    }
  }
  return data;
}

/// Largest relative disagreement between `analytic` and a central finite
/// difference of `f` at `x`. The denominator is floored at `floor` so
/// near-zero components are compared absolutely.
template <typename F>
double max_relative_fd_error(F&& f, std::vector<double> x, std::span<const double> analytic,
                             double eps = 1e-5, double floor = 1e-6) {
  if (analytic.size() != x.size()) throw InvalidArgument("gradient check: size mismatch");
  double worst = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) {
    const double saved = x[p];
    x[p] = saved + eps;
    const double up = f(std::span<const double>(x));
    x[p] = saved - eps;
    const double down = f(std::span<const double>(x));
    x[p] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::fabs(numeric), std::fabs(analytic[p]), floor});
    worst = std::max(worst, std::fabs(numeric - analytic[p]) / denom);
  }
  return worst;
}

}  // namespace adapcomfl::ml
