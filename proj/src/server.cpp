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

#include "fedalign/server.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <numeric>

#include "fedalign/errors.hpp"
#include "fedalign/metrics.hpp"

namespace fedalign {

void FederationConfig::validate(std::size_t total_clients) const {
  if (rounds == 0) throw ConfigError("federation: rounds must be >= 1");
  if (total_clients == 0) throw ConfigError("federation: no clients");
  if (clients_per_round == 0 || clients_per_round > total_clients) {
    throw ConfigError("federation: clients_per_round must be in [1, " + std::to_string(total_clients) + "]");
  }
  if (eval_every == 0) throw ConfigError("federation: eval_every must be >= 1");
  client.validate();
}

std::vector<std::size_t> select_clients(std::size_t m, std::size_t k, Rng& rng) {
  if (k == 0 || k > m) {
    throw ConfigError("select_clients: cannot select " + std::to_string(k) + " of " + std::to_string(m));
  }
  std::vector<std::size_t> ids(m);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(m - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

// Weighted mean of one coordinate across clients, clamped into the observed
// range so rounding never leaves the convex hull.
struct Averager {
  std::span<const double> weights;
  double total_weight;

  template <typename Get>
  double operator()(std::size_t count, Get get) const {
    double sum = 0.0;
    double lo = get(0);
    double hi = lo;
    for (std::size_t m = 0; m < count; ++m) {
      const double v = get(m);
      sum += weights.empty() ? v : weights[m] * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / total_weight;
    return std::clamp(mean, lo, hi);
  }
};

}  // namespace

MlpParams aggregate_data_encoder(std::span<const MlpParams> updates, std::span<const double> weights) {
  if (updates.empty()) throw ProtocolError("aggregate_data_encoder: no client updates");
  if (!weights.empty() && weights.size() != updates.size()) {
    throw ProtocolError("aggregate_data_encoder: weight count mismatch");
  }
  double total = static_cast<double>(updates.size());
  if (!weights.empty()) {
    total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ProtocolError("aggregate_data_encoder: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw ProtocolError("aggregate_data_encoder: weights sum to zero");
  }
  const std::vector<double> flat0 = flatten(updates[0]);
  std::vector<std::vector<double>> flats;
  flats.reserve(updates.size());
  for (const auto& u : updates) {
    if (u.parameter_count() != flat0.size() || u.layers.size() != updates[0].layers.size()) {
      throw ProtocolError("aggregate_data_encoder: client updates differ in shape");
    }
    flats.push_back(flatten(u));
  }
  const Averager avg{weights, total};
  std::vector<double> mean(flat0.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean[k] = avg(flats.size(), [&](std::size_t m) { return flats[m][k]; });
  }
  MlpParams out = updates[0];
  unflatten_into(out, mean);
  return out;
}

Matrix aggregate_label_table(std::span<const LabelTableUpdate> updates, const Matrix& previous) {
  if (updates.empty()) throw ProtocolError("aggregate_label_table: no client updates");
  for (const auto& u : updates) {
    if (u.table.rows() != previous.rows() || u.table.cols() != previous.cols() ||
        u.identified.universe() != previous.rows()) {
      throw ProtocolError("aggregate_label_table: client tables differ in shape");
    }
  }
  Matrix out = previous;
  std::vector<const LabelTableUpdate*> owners;
  for (std::size_t c = 0; c < previous.rows(); ++c) {
    owners.clear();
    for (const auto& u : updates) {
      if (u.identified.contains(c)) owners.push_back(&u);
    }
    if (owners.empty()) continue;
    const Averager avg{{}, static_cast<double>(owners.size())};
    for (std::size_t k = 0; k < previous.cols(); ++k) {
      out(c, k) = avg(owners.size(), [&](std::size_t m) { return owners[m]->table(c, k); });
    }
  }
  return out;
}

Matrix average_label_table(std::span<const LabelTableUpdate> updates) {
  if (updates.empty()) throw ProtocolError("average_label_table: no client updates");
  const Matrix& first = updates[0].table;
  for (const auto& u : updates) {
    if (u.table.rows() != first.rows() || u.table.cols() != first.cols()) {
      throw ProtocolError("average_label_table: client tables differ in shape");
    }
  }
  Matrix out(first.rows(), first.cols());
  const Averager avg{{}, static_cast<double>(updates.size())};
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values()[k] = avg(updates.size(), [&](std::size_t m) { return updates[m].table.values()[k]; });
  }
  return out;
}

FederatedRun run_federated(const FederationConfig& cfg, std::span<const ClientDataset> clients, const Dataset& test,
                           const GlobalModel& initial, const RoundObserver& observer) {
  cfg.validate(clients.size());
  initial.validate();
  for (const auto& c : clients) {
    if (c.identified.universe() != initial.class_count()) {
      throw ConfigError("client " + std::to_string(c.id) + " class set does not match the model");
    }
  }
  if (test.size() > 0 && test.class_count() != initial.class_count()) {
    throw ConfigError("test set label space does not match the model");
  }

  FederatedRun run{initial, {}, std::nullopt};
  Rng selector(Rng::derive(cfg.seed, 0x5e1ec7));
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    const auto started = std::chrono::steady_clock::now();
    RoundRecord rec;
    rec.round = t + 1;
    rec.selected = select_clients(clients.size(), cfg.clients_per_round, selector);

    auto train_one = [&](std::size_t m) {
      Rng rng(Rng::derive(cfg.seed, t + 1, clients[m].id + 1));
      return local_update(run.model, clients[m], cfg.client, rng, t);
    };
    std::vector<LocalUpdate> results;
    results.reserve(rec.selected.size());
    try {
      if (cfg.parallel_clients) {
        std::vector<std::future<LocalUpdate>> pending;
        for (std::size_t m : rec.selected) pending.push_back(std::async(std::launch::async, train_one, m));
        for (auto& f : pending) f.wait();
        for (auto& f : pending) results.push_back(f.get());
      } else {
        for (std::size_t m : rec.selected) results.push_back(train_one(m));
      }
    } catch (const DivergenceError& e) {
      run.failure = "round " + std::to_string(t + 1) + ": " + e.what();
      return run;
    }

    std::vector<MlpParams> encoders;
    std::vector<double> weights;
    std::vector<LabelTableUpdate> tables;
    double loss = 0.0;
    for (std::size_t k = 0; k < results.size(); ++k) {
      const ClientDataset& cd = clients[rec.selected[k]];
      encoders.push_back(std::move(results[k].model.data_encoder));
      weights.push_back(static_cast<double>(cd.size()));
      tables.push_back({std::move(results[k].model.label_table), cd.identified});
      loss += results[k].stats.final_loss();
    }
    rec.train_loss = loss / static_cast<double>(results.size());
    run.model.data_encoder =
        aggregate_data_encoder(encoders, cfg.weighted_encoder_average ? std::span<const double>(weights)
                                                                      : std::span<const double>());
    run.model.label_table = cfg.client.method == Method::kFedAlign
                                ? aggregate_label_table(tables, run.model.label_table)
                                : average_label_table(tables);

    const bool eval_round = (t + 1) % cfg.eval_every == 0 || t + 1 == cfg.rounds;
    if (eval_round && test.size() > 0) {
      const MetricsReport m = evaluate(run.model, test);
      rec.macro_f1 = m.macro_f1;
      rec.macro_accuracy = m.macro_accuracy;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    run.history.push_back(rec);
    if (observer) observer(run.history.back(), run.model);
  }
  return run;
}

}  // namespace fedalign
