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

#ifndef FEDALIGN_SERVER_HPP_
#define FEDALIGN_SERVER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedalign/client.hpp"
#include "fedalign/data.hpp"
#include "fedalign/model.hpp"
#include "fedalign/numeric.hpp"
#include "fedalign/rng.hpp"

namespace fedalign {

struct FederationConfig {
  std::size_t rounds = 50;
  std::size_t clients_per_round = 5;
  std::uint64_t seed = 0;
  ClientConfig client;
  std::size_t eval_every = 1;
  bool weighted_encoder_average = false;  // N_m-weighted encoder mean
  bool parallel_clients = false;

  /// Throws ConfigError; `total_clients` is M.
  void validate(std::size_t total_clients) const;
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::vector<std::size_t> selected;
  double train_loss = 0.0;
  std::optional<double> macro_f1;  // set on evaluation rounds
  std::optional<double> macro_accuracy;
  double seconds = 0.0;
};

using RoundHistory = std::vector<RoundRecord>;

/// Uniform k-subset of [0, m) without replacement, ascending.
std::vector<std::size_t> select_clients(std::size_t m, std::size_t k, Rng& rng);

// Elementwise mean of the client encoders (weights, when given, need not be
// normalized). Throws ProtocolError on an empty list.
MlpParams aggregate_data_encoder(std::span<const MlpParams> updates, std::span<const double> weights = {});

struct LabelTableUpdate {
  Matrix table;
  ClassSet identified;
};

// Row c becomes the mean of row c over the clients that identify c; rows no
// client identifies keep their previous value.
Matrix aggregate_label_table(std::span<const LabelTableUpdate> updates, const Matrix& previous);

/// Plain mean over all clients (the baselines' classifier aggregation).
Matrix average_label_table(std::span<const LabelTableUpdate> updates);

struct FederatedRun {
  GlobalModel model;
  RoundHistory history;
  std::optional<std::string> failure;  // divergence message; history holds completed rounds
};

/// Called after each aggregated round.
using RoundObserver = std::function<void(const RoundRecord&, const GlobalModel&)>;

// Rounds of select -> local_update -> aggregate. FedAlign aggregates the label
// table per class; the baselines average it like any other parameter.
FederatedRun run_federated(const FederationConfig& cfg, std::span<const ClientDataset> clients, const Dataset& test,
                           const GlobalModel& initial, const RoundObserver& observer = {});

}  // namespace fedalign

#endif  // FEDALIGN_SERVER_HPP_
