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

#ifndef FEDALIGN_CLIENT_HPP_
#define FEDALIGN_CLIENT_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "fedalign/data.hpp"
#include "fedalign/model.hpp"
#include "fedalign/numeric.hpp"
#include "fedalign/rng.hpp"

namespace fedalign {

enum class Method { kFedAlign, kFedAvg, kFedProx, kFedRs };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

struct Ablation {
  bool no_semantic = false;      // confidence-based annotation, random label table
  bool no_distillation = false;  // alpha forced to 0
  bool no_alternation = false;   // encoder and label table updated together
};

struct ClientConfig {
  std::size_t epochs = 5;
  double lr = 0.01;
  double alpha = 1.0;  // distillation weight
  double q1 = 95.0;    // positive-annotation percentile
  double q2 = 5.0;     // negative-annotation percentile
  std::size_t batch_size = 32;
  Method method = Method::kFedAlign;
  double mu = 0.0;        // FedProx proximal weight
  double rs_alpha = 0.5;  // FedRS scale for classes outside the identified set
  Ablation ablation;
  bool distill_every_epoch = true;  // false: form the set once per round

  /// Throws ConfigError.
  void validate() const;

  /// Distillation weight actually used for the configured method and ablations.
  double effective_alpha() const;
  bool alternating() const;
};

struct DistillEntry {
  std::size_t sample;
  std::size_t cls;
  bool positive;
  double similarity;

  friend bool operator==(const DistillEntry&, const DistillEntry&) = default;
};

// Pseudo annotations for locally-unaware classes, ordered by (sample, class).
struct DistillationSet {
  std::size_t round = 0;
  std::vector<DistillEntry> entries;
  std::vector<double> upper;  // per class; NaN for identified classes
  std::vector<double> lower;

  /// Number of distinct annotated samples (N').
  std::size_t sample_count() const;

  /// Per-sample annotation rows; rows of unannotated samples are empty.
  std::vector<std::vector<PseudoLabel>> per_sample(std::size_t samples, std::size_t classes) const;
};

/// ceil(q/100 * n)-th smallest value (rank clamped to [1, n]); `sorted` ascending, non-empty.
double nearest_rank_percentile(std::span<const double> sorted, double q);

// Applies the percentile thresholds per unaware class to an n x |C| score
// matrix. Positive when score >= upper (checked first), negative when
// score <= lower. Single-label: positives also need the class to be the
// row argmax (lowest index on ties) and negatives are dropped.
DistillationSet select_pseudo_labels(const Matrix& scores, const ClassSet& unaware, double q1, double q2,
                                     TaskKind task, std::size_t round = 0);

/// n x |C| cosine similarities between encoded samples and label rows.
Matrix similarity_matrix(const GlobalModel& model, std::span<const Vector> features);

/// n x |C| predicted probabilities (sigmoid or softmax).
Matrix confidence_matrix(const GlobalModel& model, std::span<const Vector> features);

DistillationSet form_distillation_set(const GlobalModel& model, const ClientDataset& data, double q1, double q2,
                                      std::size_t round = 0);

// Settings of one minibatch objective:
// (1/B) sum sup_i + alpha * (N/N') * (1/B) sum_{i annotated} dist_i
//   + (mu/2) * ||params - anchor||^2
struct ObjectiveSettings {
  double distill_weight = 0.0;  // alpha * N / N'
  double mu = 0.0;
  const GlobalModel* anchor = nullptr;  // required when mu > 0
  double rs_alpha = 1.0;                // logit scale outside identified set (single-label)
  bool encoder_grad = true;
  bool table_grad = true;
};

struct ObjectiveValue {
  double loss = 0.0;
  MlpParams encoder_grad;
  Matrix table_grad;
};

ObjectiveValue local_objective(const GlobalModel& model, const ClientDataset& data,
                               std::span<const std::size_t> batch,
                               std::span<const std::vector<PseudoLabel>> pseudo, const ObjectiveSettings& settings);

/// (mu/2)||p - anchor||^2 and its gradient mu (p - anchor).
double proximal_term(std::span<const double> params, std::span<const double> anchor, double mu,
                     std::span<double> grad);

struct TrainingStats {
  std::vector<double> epoch_loss;  // mean batch objective per epoch
  std::size_t last_distill_samples = 0;
  double final_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.back(); }
};

struct LocalUpdate {
  GlobalModel model;
  TrainingStats stats;
};

// One client's round. Each epoch (re)forms the distillation set, then runs a
// minibatch pass on the encoder with the label table frozen and a pass on the
// label table with the encoder frozen (or one joint pass when not alternating).
// Throws DivergenceError naming the client and epoch on a non-finite loss.
LocalUpdate local_update(const GlobalModel& global, const ClientDataset& data, const ClientConfig& cfg, Rng& rng,
                         std::size_t round = 0);

}  // namespace fedalign

#endif  // FEDALIGN_CLIENT_HPP_
