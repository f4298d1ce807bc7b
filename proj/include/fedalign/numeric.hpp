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

#ifndef FEDALIGN_NUMERIC_HPP_
#define FEDALIGN_NUMERIC_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedalign/rng.hpp"

namespace fedalign {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { kRelu, kTanh, kIdentity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Feed-forward network. `activation` follows every layer except the last,
// which stays linear. Gradients share this type (same shapes).
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kRelu;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  /// Throws ConfigError when adjacent layers do not chain.
  void validate() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Random init for widths {in, hidden..., out}: uniform Glorot weights, zero bias.
MlpParams make_mlp(std::span<const std::size_t> widths, Activation activation, Rng& rng);

/// Same shapes as `params`, all zeros.
MlpParams zeros_like(const MlpParams& params);

// Everything mlp_backward needs to replay the chain rule.
struct MlpTape {
  std::vector<Vector> layer_inputs;    // input seen by layer k
  std::vector<Vector> pre_activation;  // W_k x + b_k
};

struct MlpForward {
  Vector output;
  MlpTape tape;
};

struct MlpBackward {
  MlpParams param_grads;
  Vector grad_input;
};

MlpForward mlp_forward(const MlpParams& params, std::span<const double> x);

/// Forward pass without recording a tape.
Vector mlp_output(const MlpParams& params, std::span<const double> x);

/// Gradients of dot(output, grad_output) w.r.t. params and input.
MlpBackward mlp_backward(const MlpParams& params, const MlpTape& tape,
                         std::span<const double> grad_output);

/// into += scale * delta, shape-checked.
void axpy(MlpParams& into, const MlpParams& delta, double scale);

Vector flatten(const MlpParams& params);
void unflatten_into(MlpParams& params, std::span<const double> flat);

// p <- p - lr * g. A non-finite gradient throws DivergenceError carrying
// `context` (e.g. "client 3, epoch 2") and leaves the parameters untouched.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr,
              std::string_view context = {});
void sgd_step(MlpParams& params, const MlpParams& grads, double lr, std::string_view context = {});
void sgd_step(Matrix& params, const Matrix& grads, double lr, std::string_view context = {});

/// Central-difference gradient oracle.
Vector finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                        std::span<const double> params, double eps);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
bool all_finite(std::span<const double> a) noexcept;

/// max |a-b| / max(|a|, |b|, floor) over coordinates.
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8);

}  // namespace fedalign

#endif  // FEDALIGN_NUMERIC_HPP_
