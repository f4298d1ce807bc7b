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

#ifndef FEDALIGN_EXPERIMENT_HPP_
#define FEDALIGN_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedalign/data.hpp"
#include "fedalign/label_pretrain.hpp"
#include "fedalign/metrics.hpp"
#include "fedalign/model.hpp"
#include "fedalign/server.hpp"

namespace fedalign {

enum class DataSourceKind { kSynthetic, kFile };
enum class PartitionKind { kClassGroups, kRandomIdentified, kShards };

struct DataSourceConfig {
  DataSourceKind kind = DataSourceKind::kSynthetic;
  SyntheticSpec synthetic;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path labels_path;  // optional label-name file; ids must match the dataset
};

struct PartitionConfig {
  PartitionKind kind = PartitionKind::kClassGroups;
  std::size_t clients = 3;
  std::vector<std::vector<std::size_t>> groups;  // class groups, or per-client sets for shards
  std::size_t identified_per_client = 1;         // random partitioning
};

struct ModelConfig {
  std::size_t dim = 256;
  std::size_t hidden = 64;
  Activation activation = Activation::kRelu;
};

struct PretrainSettings {
  bool enabled = true;
  bool synthetic_corpus = true;
  std::filesystem::path corpus_path;
  std::size_t corpus_segments = 400;
  std::vector<std::vector<std::size_t>> corpus_clusters;  // synthetic corpus only
  PretrainConfig params;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataSourceConfig data;
  PartitionConfig partition;
  ModelConfig model;
  PretrainSettings pretrain;
  FederationConfig federation;
  std::filesystem::path output_dir = "out";
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only

  /// Throws ConfigError.
  void validate() const;
};

// INI-style text: [experiment] [data] [partition] [federation] [client]
// [model] [pretrain] sections of `key = value` lines. Unknown keys are
// rejected; relative paths resolve against `base_dir`. `seed` is required.
ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// History CSV: header "round,train_loss,macro_f1,macro_acc", 6-decimal
// fixed-point reals, empty metric fields on rounds without evaluation.
void write_history(std::ostream& out, const RoundHistory& history);
void write_history(const std::filesystem::path& path, const RoundHistory& history);
RoundHistory read_history(std::istream& in);

// Checkpoint text: model plus round index, reals in shortest round-trip form.
void write_checkpoint(std::ostream& out, const GlobalModel& model, std::size_t round);
void write_checkpoint(const std::filesystem::path& path, const GlobalModel& model, std::size_t round);
struct Checkpoint {
  GlobalModel model;
  std::size_t round = 0;
};
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct ExperimentData {
  Dataset train;
  Dataset test;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);
Partition prepare_partition(const ExperimentConfig& cfg, const Dataset& train);

/// Label embeddings from the configured corpus (throws ConfigError when disabled).
PretrainResult pretrain_labels(const ExperimentConfig& cfg, const LabelSpace& labels);

/// Encoder plus label table: pretrained projection for FedAlign with semantics, random otherwise.
GlobalModel build_initial_model(const ExperimentConfig& cfg, const Dataset& train,
                                const std::optional<Matrix>& name_embeddings);

struct ExperimentResult {
  FederatedRun run;
  Partition partition;
  MetricsReport final_metrics;
  std::vector<std::string> warnings;
};

// Full pipeline. When `write_outputs` is set, writes history.csv, summary.txt,
// partition.txt, run_report.txt, checkpoints (and label_embeddings.txt when
// pretraining) into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs = true);

}  // namespace fedalign

#endif  // FEDALIGN_EXPERIMENT_HPP_
