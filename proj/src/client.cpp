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

#include "fedalign/client.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedalign/errors.hpp"

namespace fedalign {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kFedAlign:
      return "fedalign";
    case Method::kFedAvg:
      return "fedavg";
    case Method::kFedProx:
      return "fedprox";
    case Method::kFedRs:
      return "fedrs";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  if (name == "fedalign") return Method::kFedAlign;
  if (name == "fedavg") return Method::kFedAvg;
  if (name == "fedprox") return Method::kFedProx;
  if (name == "fedrs") return Method::kFedRs;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void ClientConfig::validate() const {
  if (epochs == 0) throw ConfigError("client: epochs must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("client: lr must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("client: alpha must be >= 0");
  if (!(q1 >= 0.0 && q1 <= 100.0 && q2 >= 0.0 && q2 <= 100.0)) {
    throw ConfigError("client: percentiles must lie in [0, 100]");
  }
  if (!(q2 < q1)) throw ConfigError("client: q2 must be below q1");
  if (batch_size == 0) throw ConfigError("client: batch_size must be >= 1");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("client: mu must be >= 0");
  if (!(rs_alpha > 0.0 && rs_alpha <= 1.0)) throw ConfigError("client: FedRS alpha must be in (0, 1]");
}

double ClientConfig::effective_alpha() const {
  if (method != Method::kFedAlign || ablation.no_distillation) return 0.0;
  return alpha;
}

bool ClientConfig::alternating() const { return method == Method::kFedAlign && !ablation.no_alternation; }

std::size_t DistillationSet::sample_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k == 0 || entries[k].sample != entries[k - 1].sample) ++n;
  }
  return n;
}

std::vector<std::vector<PseudoLabel>> DistillationSet::per_sample(std::size_t samples, std::size_t classes) const {
  std::vector<std::vector<PseudoLabel>> rows(samples);
  for (const auto& e : entries) {
    auto& row = rows.at(e.sample);
    if (row.empty()) row.assign(classes, PseudoLabel::kNone);
    row.at(e.cls) = e.positive ? PseudoLabel::kPositive : PseudoLabel::kNegative;
  }
  return rows;
}

double nearest_rank_percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ConfigError("percentile of an empty list");
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

DistillationSet select_pseudo_labels(const Matrix& scores, const ClassSet& unaware, double q1, double q2,
                                     TaskKind task, std::size_t round) {
  const std::size_t n = scores.rows();
  const std::size_t classes = scores.cols();
  if (unaware.universe() != classes) throw ConfigError("select_pseudo_labels: class set size mismatch");
  if (!(q2 < q1)) throw ConfigError("select_pseudo_labels: q2 must be below q1");

  DistillationSet ds;
  ds.round = round;
  ds.upper.assign(classes, std::numeric_limits<double>::quiet_NaN());
  ds.lower.assign(classes, std::numeric_limits<double>::quiet_NaN());
  if (n == 0) return ds;

  std::vector<std::size_t> row_argmax(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 1; c < classes; ++c) {
      if (scores(i, c) > scores(i, row_argmax[i])) row_argmax[i] = c;
    }
  }

  const auto unaware_classes = unaware.members();
  std::vector<double> column(n);
  for (std::size_t c : unaware_classes) {
    for (std::size_t i = 0; i < n; ++i) column[i] = scores(i, c);
    std::sort(column.begin(), column.end());
    ds.upper[c] = nearest_rank_percentile(column, q1);
    ds.lower[c] = nearest_rank_percentile(column, q2);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c : unaware_classes) {
      const double s = scores(i, c);
      if (s >= ds.upper[c]) {
        if (task == TaskKind::kSingleLabel && row_argmax[i] != c) continue;
        ds.entries.push_back({i, c, true, s});
      } else if (s <= ds.lower[c] && task == TaskKind::kMultiLabel) {
        ds.entries.push_back({i, c, false, s});
      }
    }
  }
  return ds;
}

Matrix similarity_matrix(const GlobalModel& model, std::span<const Vector> features) {
  Matrix s(features.size(), model.class_count());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vector z = encode_data(model, features[i]);
    for (std::size_t c = 0; c < model.class_count(); ++c) {
      s(i, c) = cosine_similarity(model.label_table.row(c), z);
    }
  }
  return s;
}

Matrix confidence_matrix(const GlobalModel& model, std::span<const Vector> features) {
  Matrix s(features.size(), model.class_count());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vector logits = class_scores(encode_data(model, features[i]), model.label_table);
    Vector p;
    if (model.task == TaskKind::kSingleLabel) {
      p = softmax(logits);
    } else {
      p.resize(logits.size());
      for (std::size_t c = 0; c < logits.size(); ++c) p[c] = sigmoid(logits[c]);
    }
    std::copy(p.begin(), p.end(), s.row(i).begin());
  }
  return s;
}

DistillationSet form_distillation_set(const GlobalModel& model, const ClientDataset& data, double q1, double q2,
                                      std::size_t round) {
  const ClassSet unaware = data.unaware();
  if (unaware.empty()) {
    DistillationSet ds;
    ds.round = round;
    ds.upper.assign(model.class_count(), std::numeric_limits<double>::quiet_NaN());
    ds.lower = ds.upper;
    return ds;
  }
  return select_pseudo_labels(similarity_matrix(model, data.features), unaware, q1, q2, model.task, round);
}

double proximal_term(std::span<const double> params, std::span<const double> anchor, double mu,
                     std::span<double> grad) {
  if (params.size() != anchor.size() || grad.size() != params.size()) {
    throw ConfigError("proximal_term: size mismatch");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double d = params[i] - anchor[i];
    sq += d * d;
    grad[i] += mu * d;
  }
  return 0.5 * mu * sq;
}

ObjectiveValue local_objective(const GlobalModel& model, const ClientDataset& data,
                               std::span<const std::size_t> batch,
                               std::span<const std::vector<PseudoLabel>> pseudo, const ObjectiveSettings& settings) {
  const std::size_t classes = model.class_count();
  ObjectiveValue out;
  if (settings.encoder_grad) out.encoder_grad = zeros_like(model.data_encoder);
  if (settings.table_grad) out.table_grad = Matrix(classes, model.dim());
  if (batch.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const bool rs_scaling = settings.rs_alpha != 1.0 && model.task == TaskKind::kSingleLabel;

  for (std::size_t i : batch) {
    MlpForward fwd = mlp_forward(model.data_encoder, data.features.at(i));
    const Vector& z = fwd.output;
    Vector logits = class_scores(z, model.label_table);
    if (rs_scaling) {
      for (std::size_t c = 0; c < classes; ++c) {
        if (!data.identified.contains(c)) logits[c] *= settings.rs_alpha;
      }
    }
    LossGrad sup = supervised_loss(logits, data.labels[i], data.identified, model.task);
    out.loss += sup.loss * inv_b;
    Vector g = std::move(sup.grad_logits);
    for (double& v : g) v *= inv_b;

    if (settings.distill_weight > 0.0 && i < pseudo.size() && !pseudo[i].empty()) {
      const LossGrad dist = distillation_loss(logits, pseudo[i], model.task);
      const double w = settings.distill_weight * inv_b;
      out.loss += w * dist.loss;
      for (std::size_t c = 0; c < classes; ++c) g[c] += w * dist.grad_logits[c];
    }
    if (rs_scaling) {
      for (std::size_t c = 0; c < classes; ++c) {
        if (!data.identified.contains(c)) g[c] *= settings.rs_alpha;
      }
    }

    if (settings.table_grad) {
      for (std::size_t c = 0; c < classes; ++c) {
        if (g[c] == 0.0) continue;
        auto row = out.table_grad.row(c);
        for (std::size_t k = 0; k < z.size(); ++k) row[k] += g[c] * z[k];
      }
    }
    if (settings.encoder_grad) {
      Vector grad_z(z.size(), 0.0);
      for (std::size_t c = 0; c < classes; ++c) {
        if (g[c] == 0.0) continue;
        const auto r = model.label_table.row(c);
        for (std::size_t k = 0; k < z.size(); ++k) grad_z[k] += g[c] * r[k];
      }
      const MlpBackward back = mlp_backward(model.data_encoder, fwd.tape, grad_z);
      axpy(out.encoder_grad, back.param_grads, 1.0);
    }
  }

  if (settings.mu > 0.0) {
    if (settings.anchor == nullptr) throw ConfigError("local_objective: proximal term needs an anchor model");
    const Vector enc = flatten(model.data_encoder);
    const Vector enc_anchor = flatten(settings.anchor->data_encoder);
    Vector enc_grad(enc.size(), 0.0);
    out.loss += proximal_term(enc, enc_anchor, settings.mu, enc_grad);
    if (settings.encoder_grad) {
      MlpParams prox = zeros_like(model.data_encoder);
      unflatten_into(prox, enc_grad);
      axpy(out.encoder_grad, prox, 1.0);
    }
    std::vector<double> table_grad(model.label_table.size(), 0.0);
    out.loss += proximal_term(model.label_table.values(), settings.anchor->label_table.values(), settings.mu,
                              table_grad);
    if (settings.table_grad) {
      auto tg = out.table_grad.values();
      for (std::size_t k = 0; k < tg.size(); ++k) tg[k] += table_grad[k];
    }
  }
  return out;
}

namespace {

std::string context_of(std::size_t client, std::size_t round, std::size_t epoch) {
  return "client " + std::to_string(client) + ", round " + std::to_string(round + 1) + ", epoch " +
         std::to_string(epoch + 1);
}

// One minibatch pass; returns the mean batch objective.
double run_pass(GlobalModel& local, const ClientDataset& data, std::span<const std::vector<PseudoLabel>> pseudo,
                ObjectiveSettings settings, bool update_encoder, bool update_table, std::size_t batch_size,
                double lr, Rng& rng, const std::string& context) {
  settings.encoder_grad = update_encoder;
  settings.table_grad = update_table;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, order.size() - start);
    const std::span<const std::size_t> batch(order.data() + start, len);
    ObjectiveValue obj = local_objective(local, data, batch, pseudo, settings);
    if (!std::isfinite(obj.loss)) throw DivergenceError("non-finite loss (" + context + ")");
    if (update_encoder) sgd_step(local.data_encoder, obj.encoder_grad, lr, context);
    if (update_table) sgd_step(local.label_table, obj.table_grad, lr, context);
    total += obj.loss;
    ++batches;
  }
  return batches ? total / static_cast<double>(batches) : 0.0;
}

}  // namespace

LocalUpdate local_update(const GlobalModel& global, const ClientDataset& data, const ClientConfig& cfg, Rng& rng,
                         std::size_t round) {
  cfg.validate();
  if (data.identified.universe() != global.class_count()) {
    throw ConfigError("client " + std::to_string(data.id) + ": class set size does not match the model");
  }
  LocalUpdate out{global, {}};
  GlobalModel& local = out.model;
  const std::size_t n = data.size();
  const double alpha = cfg.effective_alpha();
  const bool single = global.task == TaskKind::kSingleLabel;

  ObjectiveSettings settings;
  settings.mu = cfg.method == Method::kFedProx ? cfg.mu : 0.0;
  settings.anchor = &global;
  settings.rs_alpha = (cfg.method == Method::kFedRs && single) ? cfg.rs_alpha : 1.0;

  std::vector<std::vector<PseudoLabel>> pseudo;
  std::size_t annotated = 0;
  auto adopt = [&](const DistillationSet& ds) {
    pseudo = ds.per_sample(n, global.class_count());
    annotated = ds.sample_count();
  };
  if (alpha > 0.0 && cfg.ablation.no_semantic) {
    adopt(select_pseudo_labels(confidence_matrix(global, data.features), data.unaware(), cfg.q1, cfg.q2,
                               global.task, round));
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::string context = context_of(data.id, round, epoch);
    if (alpha > 0.0 && !cfg.ablation.no_semantic && (cfg.distill_every_epoch || epoch == 0)) {
      adopt(form_distillation_set(local, data, cfg.q1, cfg.q2, round));
    }
    settings.distill_weight =
        annotated > 0 ? alpha * static_cast<double>(n) / static_cast<double>(annotated) : 0.0;

    double loss;
    if (cfg.alternating()) {
      loss = run_pass(local, data, pseudo, settings, true, false, cfg.batch_size, cfg.lr, rng, context);
      run_pass(local, data, pseudo, settings, false, true, cfg.batch_size, cfg.lr, rng, context);
    } else {
      loss = run_pass(local, data, pseudo, settings, true, true, cfg.batch_size, cfg.lr, rng, context);
    }
    out.stats.epoch_loss.push_back(loss);
  }
  out.stats.last_distill_samples = annotated;
  return out;
}

}  // namespace fedalign
