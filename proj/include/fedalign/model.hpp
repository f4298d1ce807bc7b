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

#ifndef FEDALIGN_MODEL_HPP_
#define FEDALIGN_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedalign/numeric.hpp"

namespace fedalign {

enum class TaskKind { kSingleLabel, kMultiLabel };

std::string_view to_string(TaskKind t);
TaskKind task_kind_from_string(std::string_view name);

enum class LabelState : std::uint8_t { kNegative = 0, kPositive = 1, kUnknown = 2 };

using TriStateLabels = std::vector<LabelState>;

// Subset of the universal class set, stored as a membership mask.
class ClassSet {
 public:
  ClassSet() = default;
  explicit ClassSet(std::size_t universe) : bits_(universe, 0) {}
  ClassSet(std::size_t universe, std::span<const std::size_t> members);

  std::size_t universe() const noexcept { return bits_.size(); }
  bool contains(std::size_t c) const { return c < bits_.size() && bits_[c] != 0; }
  void insert(std::size_t c);
  void erase(std::size_t c) { bits_.at(c) = 0; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  std::vector<std::size_t> members() const;
  ClassSet complement() const;

  friend bool operator==(const ClassSet&, const ClassSet&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Per-class pseudo annotation used by the distillation loss.
enum class PseudoLabel : std::uint8_t { kNone = 0, kPositive, kNegative };

// The communicated model: data encoder plus one d-dimensional row per class.
// Scores are dot products between the encoded sample and each row.
struct GlobalModel {
  MlpParams data_encoder;
  Matrix label_table;  // classes x d
  TaskKind task = TaskKind::kSingleLabel;

  std::size_t class_count() const noexcept { return label_table.rows(); }
  std::size_t dim() const noexcept { return label_table.cols(); }

  /// Throws ConfigError when the encoder output does not match the table width
  /// or an entry is non-finite.
  void validate() const;

  friend bool operator==(const GlobalModel&, const GlobalModel&) = default;
};

Vector encode_data(const GlobalModel& model, std::span<const double> x);

/// logits[c] = z . label_table[c]
Vector class_scores(std::span<const double> z, const Matrix& label_table);

/// Single-label: the argmax (lowest index on ties). Multi-label: every class
/// with a strictly positive logit.
std::vector<std::size_t> predict(std::span<const double> logits, TaskKind task);

double sigmoid(double x);
Vector softmax(std::span<const double> logits);

/// Probabilities are clamped into [kProbFloor, 1 - kProbFloor] inside the losses.
inline constexpr double kProbFloor = 1e-7;

struct LossGrad {
  double loss = 0.0;
  Vector grad_logits;
};

// Supervised loss of one sample over its identified classes.
// Single-label: softmax over every class, cross-entropy on the identified
// positive (zero when the true class is not identified).
// Multi-label: sigmoid BCE summed over identified classes.
// Throws DataIntegrityError when an identified class is unknown.
LossGrad supervised_loss(std::span<const double> logits, std::span<const LabelState> labels,
                         const ClassSet& identified, TaskKind task);

// Distillation loss of one sample.
// Multi-label: BCE over annotated classes only.
// Single-label: softmax cross-entropy against the positively annotated class;
// negative annotations contribute nothing.
LossGrad distillation_loss(std::span<const double> logits, std::span<const PseudoLabel> pseudo, TaskKind task);

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace fedalign

#endif  // FEDALIGN_MODEL_HPP_
