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

#include "fedalign/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedalign/errors.hpp"

namespace fedalign {

std::string_view to_string(TaskKind t) {
  return t == TaskKind::kSingleLabel ? "single_label" : "multi_label";
}

TaskKind task_kind_from_string(std::string_view name) {
  if (name == "single_label") return TaskKind::kSingleLabel;
  if (name == "multi_label") return TaskKind::kMultiLabel;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

ClassSet::ClassSet(std::size_t universe, std::span<const std::size_t> members) : bits_(universe, 0) {
  for (std::size_t c : members) insert(c);
}

void ClassSet::insert(std::size_t c) {
  if (c >= bits_.size()) throw ConfigError("class index " + std::to_string(c) + " outside the class set");
  bits_[c] = 1;
}

std::size_t ClassSet::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> ClassSet::members() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < bits_.size(); ++c) {
    if (bits_[c]) out.push_back(c);
  }
  return out;
}

ClassSet ClassSet::complement() const {
  ClassSet out(bits_.size());
  for (std::size_t c = 0; c < bits_.size(); ++c) out.bits_[c] = bits_[c] ? 0 : 1;
  return out;
}

void GlobalModel::validate() const {
  data_encoder.validate();
  if (data_encoder.output_dim() != label_table.cols()) {
    throw ConfigError("data encoder output dim " + std::to_string(data_encoder.output_dim()) +
                      " does not match label table width " + std::to_string(label_table.cols()));
  }
  if (!label_table.all_finite()) throw ConfigError("label table has non-finite entries");
  for (const auto& l : data_encoder.layers) {
    if (!l.weight.all_finite() || !all_finite(l.bias)) throw ConfigError("data encoder has non-finite entries");
  }
}

Vector encode_data(const GlobalModel& model, std::span<const double> x) {
  return mlp_output(model.data_encoder, x);
}

Vector class_scores(std::span<const double> z, const Matrix& label_table) {
  if (z.size() != label_table.cols()) throw ConfigError("class_scores: representation dimension mismatch");
  Vector logits(label_table.rows());
  for (std::size_t c = 0; c < logits.size(); ++c) logits[c] = dot(z, label_table.row(c));
  return logits;
}

std::vector<std::size_t> predict(std::span<const double> logits, TaskKind task) {
  std::vector<std::size_t> out;
  if (logits.empty()) return out;
  if (task == TaskKind::kSingleLabel) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    out.push_back(best);
  } else {
    for (std::size_t c = 0; c < logits.size(); ++c) {
      if (logits[c] > 0.0) out.push_back(c);
    }
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector softmax(std::span<const double> logits) {
  Vector p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace {

constexpr double kProbCeil = 1.0 - kProbFloor;

// -log(clamp(p)) and its derivative factor: returns 0 slope when clamped.
struct ClampedLog {
  double neg_log;
  bool clamped;
};

ClampedLog clamped_neg_log(double p) {
  if (p < kProbFloor) return {-std::log(kProbFloor), true};
  if (p > kProbCeil) return {-std::log(kProbCeil), true};
  return {-std::log(p), false};
}

// Adds the BCE term for one class with target y in {0,1}.
void add_bce(double logit, double y, double& loss, double& grad) {
  const double p = sigmoid(logit);
  if (y > 0.5) {
    const auto t = clamped_neg_log(p);
    loss += t.neg_log;
    if (!t.clamped) grad += p - 1.0;
  } else {
    const auto t = clamped_neg_log(1.0 - p);
    loss += t.neg_log;
    if (!t.clamped) grad += p;
  }
}

// Softmax cross-entropy against class `target`, gradient added into grad.
double add_softmax_ce(std::span<const double> logits, std::size_t target, Vector& grad) {
  const Vector p = softmax(logits);
  const auto t = clamped_neg_log(p[target]);
  if (!t.clamped) {
    for (std::size_t c = 0; c < p.size(); ++c) grad[c] += p[c];
    grad[target] -= 1.0;
  }
  return t.neg_log;
}

}  // namespace

LossGrad supervised_loss(std::span<const double> logits, std::span<const LabelState> labels,
                         const ClassSet& identified, TaskKind task) {
  const std::size_t n = logits.size();
  if (labels.size() != n || identified.universe() != n) {
    throw ConfigError("supervised_loss: logits, labels and identified set differ in size");
  }
  LossGrad out{0.0, Vector(n, 0.0)};
  for (std::size_t c = 0; c < n; ++c) {
    if (identified.contains(c) && labels[c] == LabelState::kUnknown) {
      throw DataIntegrityError("label of identified class " + std::to_string(c) + " is unknown");
    }
  }
  if (task == TaskKind::kSingleLabel) {
    for (std::size_t c = 0; c < n; ++c) {
      if (identified.contains(c) && labels[c] == LabelState::kPositive) {
        out.loss += add_softmax_ce(logits, c, out.grad_logits);
      }
    }
  } else {
    for (std::size_t c = 0; c < n; ++c) {
      if (!identified.contains(c)) continue;
      add_bce(logits[c], labels[c] == LabelState::kPositive ? 1.0 : 0.0, out.loss, out.grad_logits[c]);
    }
  }
  return out;
}

LossGrad distillation_loss(std::span<const double> logits, std::span<const PseudoLabel> pseudo, TaskKind task) {
  const std::size_t n = logits.size();
  if (pseudo.size() != n) throw ConfigError("distillation_loss: annotation size mismatch");
  LossGrad out{0.0, Vector(n, 0.0)};
  if (task == TaskKind::kSingleLabel) {
    for (std::size_t c = 0; c < n; ++c) {
      if (pseudo[c] == PseudoLabel::kPositive) out.loss += add_softmax_ce(logits, c, out.grad_logits);
    }
  } else {
    for (std::size_t c = 0; c < n; ++c) {
      if (pseudo[c] == PseudoLabel::kNone) continue;
      add_bce(logits[c], pseudo[c] == PseudoLabel::kPositive ? 1.0 : 0.0, out.loss, out.grad_logits[c]);
    }
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("cosine_similarity: dimension mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace fedalign
