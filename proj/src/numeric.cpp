/**
 * Copyright 2026 The FedAlign Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fedalign/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "fedalign/errors.hpp"

namespace fedalign {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ConfigError("Matrix: " + std::to_string(data_.size()) + " entries for " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

bool Matrix::all_finite() const noexcept { return fedalign::all_finite(data_); }

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpParams::input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }

std::size_t MlpParams::output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ConfigError("MLP has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.bias.size() != l.weight.rows()) {
      throw ConfigError("layer " + std::to_string(k) + ": bias size does not match weight rows");
    }
    if (k > 0 && layers[k - 1].weight.rows() != l.weight.cols()) {
      throw ConfigError("layer " + std::to_string(k) + ": input dim " + std::to_string(l.weight.cols()) +
                        " does not chain with previous output dim " +
                        std::to_string(layers[k - 1].weight.rows()));
    }
  }
}

MlpParams make_mlp(std::span<const std::size_t> widths, Activation activation, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("make_mlp needs at least input and output widths");
  MlpParams p;
  p.activation = activation;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::size_t in = widths[k];
    const std::size_t out = widths[k + 1];
    if (in == 0 || out == 0) throw ConfigError("make_mlp: zero layer width");
    DenseLayer layer{Matrix(out, in), Vector(out, 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpParams zeros_like(const MlpParams& params) {
  MlpParams z;
  z.activation = params.activation;
  z.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    z.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), Vector(l.bias.size(), 0.0)});
  }
  return z;
}

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kRelu:
      return v > 0.0 ? v : 0.0;
    case Activation::kTanh:
      return std::tanh(v);
    case Activation::kIdentity:
      return v;
  }
  return v;
}

// Derivative expressed through the pre-activation value.
double activate_grad(Activation a, double pre) {
  switch (a) {
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

Vector affine(const DenseLayer& layer, std::span<const double> x) {
  const std::size_t out = layer.weight.rows();
  Vector y(layer.bias);
  for (std::size_t r = 0; r < out; ++r) y[r] += dot(layer.weight.row(r), x);
  return y;
}

void check_input(const MlpParams& params, std::size_t dim) {
  if (params.layers.empty()) throw ConfigError("MLP has no layers");
  if (dim != params.input_dim()) {
    throw ConfigError("MLP input dimension " + std::to_string(dim) + " does not match expected " +
                      std::to_string(params.input_dim()));
  }
}

}  // namespace

MlpForward mlp_forward(const MlpParams& params, std::span<const double> x) {
  check_input(params, x.size());
  MlpForward f;
  f.tape.layer_inputs.reserve(params.layers.size());
  f.tape.pre_activation.reserve(params.layers.size());
  Vector current(x.begin(), x.end());
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    Vector pre = affine(params.layers[k], current);
    f.tape.layer_inputs.push_back(std::move(current));
    current = pre;
    if (k + 1 < params.layers.size()) {
      for (double& v : current) v = activate(params.activation, v);
    }
    f.tape.pre_activation.push_back(std::move(pre));
  }
  f.output = std::move(current);
  return f;
}

Vector mlp_output(const MlpParams& params, std::span<const double> x) {
  check_input(params, x.size());
  Vector current(x.begin(), x.end());
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    current = affine(params.layers[k], current);
    if (k + 1 < params.layers.size()) {
      for (double& v : current) v = activate(params.activation, v);
    }
  }
  return current;
}

MlpBackward mlp_backward(const MlpParams& params, const MlpTape& tape,
                         std::span<const double> grad_output) {
  const std::size_t n = params.layers.size();
  if (tape.layer_inputs.size() != n || tape.pre_activation.size() != n) {
    throw InternalError("mlp_backward: tape depth does not match parameters");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (tape.layer_inputs[k].size() != params.layers[k].weight.cols() ||
        tape.pre_activation[k].size() != params.layers[k].weight.rows()) {
      throw InternalError("mlp_backward: tape layer " + std::to_string(k) + " has stale shape");
    }
  }
  if (grad_output.size() != params.output_dim()) {
    throw InternalError("mlp_backward: grad_output dimension mismatch");
  }

  MlpBackward b;
  b.param_grads = zeros_like(params);
  // delta = dL/d(pre-activation of layer k)
  Vector delta(grad_output.begin(), grad_output.end());
  for (std::size_t k = n; k-- > 0;) {
    const DenseLayer& layer = params.layers[k];
    DenseLayer& g = b.param_grads.layers[k];
    const Vector& in = tape.layer_inputs[k];
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      g.bias[r] = delta[r];
      auto grow = g.weight.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) grow[c] = delta[r] * in[c];
    }
    Vector upstream(layer.weight.cols(), 0.0);
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      if (delta[r] == 0.0) continue;
      auto wrow = layer.weight.row(r);
      for (std::size_t c = 0; c < upstream.size(); ++c) upstream[c] += delta[r] * wrow[c];
    }
    if (k > 0) {
      const Vector& prev_pre = tape.pre_activation[k - 1];
      for (std::size_t c = 0; c < upstream.size(); ++c) {
        upstream[c] *= activate_grad(params.activation, prev_pre[c]);
      }
    }
    delta = std::move(upstream);
  }
  b.grad_input = std::move(delta);
  return b;
}

namespace {

void check_same_shape(const MlpParams& a, const MlpParams& b) {
  if (a.layers.size() != b.layers.size()) throw ConfigError("MLP shape mismatch: layer count");
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].weight.rows() != b.layers[k].weight.rows() ||
        a.layers[k].weight.cols() != b.layers[k].weight.cols() ||
        a.layers[k].bias.size() != b.layers[k].bias.size()) {
      throw ConfigError("MLP shape mismatch at layer " + std::to_string(k));
    }
  }
}

}  // namespace

void axpy(MlpParams& into, const MlpParams& delta, double scale) {
  check_same_shape(into, delta);
  for (std::size_t k = 0; k < into.layers.size(); ++k) {
    auto w = into.layers[k].weight.values();
    auto dw = delta.layers[k].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * dw[i];
    auto& b = into.layers[k].bias;
    const auto& db = delta.layers[k].bias;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += scale * db[i];
  }
}

Vector flatten(const MlpParams& params) {
  Vector flat;
  flat.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    flat.insert(flat.end(), l.weight.values().begin(), l.weight.values().end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void unflatten_into(MlpParams& params, std::span<const double> flat) {
  if (flat.size() != params.parameter_count()) throw ConfigError("unflatten: size mismatch");
  std::size_t pos = 0;
  for (auto& l : params.layers) {
    auto w = l.weight.values();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), w.size(), w.begin());
    pos += w.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr,
              std::string_view context) {
  if (params.size() != grads.size()) throw ConfigError("sgd_step: shape mismatch");
  if (!all_finite(grads)) {
    std::string msg = "non-finite gradient";
    if (!context.empty()) msg += " (" + std::string(context) + ")";
    throw DivergenceError(msg);
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void sgd_step(MlpParams& params, const MlpParams& grads, double lr, std::string_view context) {
  check_same_shape(params, grads);
  for (const auto& l : grads.layers) {
    if (!all_finite(l.weight.values()) || !all_finite(l.bias)) {
      std::string msg = "non-finite gradient";
      if (!context.empty()) msg += " (" + std::string(context) + ")";
      throw DivergenceError(msg);
    }
  }
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    sgd_step(params.layers[k].weight.values(), grads.layers[k].weight.values(), lr, context);
    sgd_step(params.layers[k].bias, grads.layers[k].bias, lr, context);
  }
}

void sgd_step(Matrix& params, const Matrix& grads, double lr, std::string_view context) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols()) {
    throw ConfigError("sgd_step: matrix shape mismatch");
  }
  sgd_step(params.values(), grads.values(), lr, context);
}

Vector finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                        std::span<const double> params, double eps) {
  Vector probe(params.begin(), params.end());
  Vector grad(params.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = fn(probe);
    probe[i] = orig - eps;
    const double down = fn(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) noexcept {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace fedalign
