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

#ifndef FEDALIGN_DATA_HPP_
#define FEDALIGN_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedalign/label_pretrain.hpp"
#include "fedalign/model.hpp"
#include "fedalign/numeric.hpp"
#include "fedalign/rng.hpp"

namespace fedalign {

// Fully labelled dataset over the universal class set.
struct Dataset {
  LabelSpace labels;
  TaskKind task = TaskKind::kSingleLabel;
  std::vector<Vector> features;
  std::vector<std::vector<std::uint8_t>> truth;  // 0/1 per class
  std::vector<int> subjects;                     // empty, or one id per sample

  std::size_t size() const noexcept { return features.size(); }
  std::size_t class_count() const noexcept { return labels.size(); }
  std::size_t feature_dim() const noexcept { return features.empty() ? 0 : features.front().size(); }
  bool has_subjects() const noexcept { return !subjects.empty(); }

  /// Throws DataIntegrityError on ragged features, bad label vectors, or a
  /// single-label sample without exactly one positive.
  void validate() const;
};

// One client's local view: labels are known only on the identified classes.
struct ClientDataset {
  std::size_t id = 0;
  std::vector<Vector> features;
  std::vector<TriStateLabels> labels;
  std::vector<std::size_t> source_index;  // row in the partitioned dataset
  ClassSet identified;

  std::size_t size() const noexcept { return features.size(); }
  ClassSet unaware() const { return identified.complement(); }

  /// Throws DataIntegrityError when a label is unknown on an identified class
  /// or known on an unaware one.
  void validate() const;
};

/// Client view of `rows` of `data`, hiding labels outside `identified`.
ClientDataset make_client_dataset(std::size_t id, const Dataset& data, std::span<const std::size_t> rows,
                                  const ClassSet& identified);

struct SyntheticSpec {
  std::size_t classes = 6;
  std::size_t clients = 3;
  std::size_t samples_per_class = 100;
  std::size_t feature_dim = 8;
  double spread = 3.0;  // stddev of the class centers
  double noise = 1.0;   // stddev of per-sample noise
  TaskKind task = TaskKind::kSingleLabel;
  std::size_t positives_per_sample = 2;  // multi-label only
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainTest {
  Dataset train;
  Dataset test;
  Matrix centers;  // classes x feature_dim
};

// Gaussian class clusters. Each class anchors samples_per_class samples whose
// features are the mean of their positive classes' centers plus noise; 80% of
// each class's samples go to train.
TrainTest generate_synthetic(const SyntheticSpec& spec, Rng& rng);
TrainTest generate_synthetic(const SyntheticSpec& spec);

struct Partition {
  std::vector<ClientDataset> clients;
  std::vector<std::size_t> identified_without_positive;  // class ids with no local positive
  std::vector<std::size_t> unidentified_classes;         // identified by no client

  bool ok() const noexcept { return identified_without_positive.empty(); }
};

// Splits the largest group (ties: earliest) at a random cut of a shuffled copy
// until there are num_clients groups; group k becomes client k's class set.
std::vector<std::vector<std::size_t>> split_class_groups(std::vector<std::vector<std::size_t>> groups,
                                                         std::size_t num_clients, std::size_t class_count,
                                                         Rng& rng);

// Disjoint class groups, one per client. Each sample goes to the owner of its
// least frequent positive class (training-set frequency, ties by lowest index);
// samples without positives go to a random client. With subject ids, a
// subject's samples all follow the subject's majority assignment.
Partition partition_by_class_groups(const Dataset& data, std::size_t num_clients,
                                    const std::vector<std::vector<std::size_t>>& initial_groups, Rng& rng);

// Uniform shards (or one shard per subject group) with k identified classes
// drawn independently per client.
Partition partition_random_identified(const Dataset& data, std::size_t num_clients, std::size_t k, Rng& rng);

// Uniform shards as above with explicit identified class sets, one per client
// (sets may overlap or leave classes uncovered).
Partition partition_shards(const Dataset& data, std::size_t num_clients,
                           const std::vector<std::vector<std::size_t>>& identified, Rng& rng);

// Dataset text format:
//   fedalign-dataset 1
//   task <single_label|multi_label>
//   features <dim>
//   classes <n> <id_1> ... <id_n>
//   samples <count>
//   <subject|-> <label bits, n chars of 0/1> <f_1> ... <f_dim>     (one per sample)
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const Dataset& data);

/// Per-client audit listing: sample counts and identified class ids.
void write_partition_manifest(std::ostream& out, const Partition& partition, const LabelSpace& labels);

}  // namespace fedalign

#endif  // FEDALIGN_DATA_HPP_
