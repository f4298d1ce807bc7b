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

#ifndef FEDALIGN_LABEL_PRETRAIN_HPP_
#define FEDALIGN_LABEL_PRETRAIN_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedalign/numeric.hpp"
#include "fedalign/rng.hpp"

namespace fedalign {

using Words = std::vector<std::string>;

/// Lowercase ASCII, split on runs of non-alphanumeric bytes. Bytes >= 0x80 are
/// kept as word characters so UTF-8 words survive intact.
Words tokenize(std::string_view text);

// The universal class set with natural-language names.
struct LabelSpace {
  std::vector<std::string> ids;
  std::vector<Words> names;
  std::vector<std::size_t> windows;  // sliding-window length per class

  std::size_t size() const noexcept { return ids.size(); }
  std::optional<std::size_t> index_of(std::string_view id) const;

  /// Adds a class; window 0 means the default of twice the name's word count.
  void add(std::string id, Words name, std::size_t window = 0);

  /// Throws ConfigError on duplicate ids, empty names, or a window shorter
  /// than the name.
  void validate() const;

  /// Classes named by their ids, each with a one-word name.
  static LabelSpace from_ids(std::vector<std::string> ids);
};

// Label-name file: one class per line, `id<TAB>name words[<TAB>window]`.
// Blank lines and lines starting with '#' are skipped.
LabelSpace read_label_space(std::istream& in);
void write_label_space(std::ostream& out, const LabelSpace& labels);

/// True iff some window of `window` consecutive words covers every word of
/// `label_name` (as a multiset). Segments shorter than the window are one window.
bool match_label_in_segment(std::span<const std::string> segment, std::span<const std::string> label_name,
                            std::size_t window);

struct CooccurrenceCounts {
  std::size_t segment_count = 0;
  std::vector<std::size_t> occurrences;          // per class
  std::vector<std::vector<std::size_t>> joint;   // symmetric, diagonal = occurrences

  double p(std::size_t i) const;
  double p(std::size_t i, std::size_t j) const;
};

/// Incremental counter; a label counts at most once per segment.
class CooccurrenceCounter {
 public:
  explicit CooccurrenceCounter(const LabelSpace& labels);

  void add_segment(std::span<const std::string> segment);
  void add_text(std::string_view line) { add_segment(tokenize(line)); }

  /// Throws ConfigError when no segment was added.
  CooccurrenceCounts finish() const;

 private:
  const LabelSpace* labels_;
  CooccurrenceCounts counts_;
  std::vector<std::size_t> present_;
};

CooccurrenceCounts count_cooccurrences(std::span<const Words> corpus, const LabelSpace& labels);

/// One segment per line.
CooccurrenceCounts count_cooccurrences(std::istream& corpus, const LabelSpace& labels);

// Symmetric PMI with absent entries for pairs that never co-occur. The
// diagonal is always absent.
class PmiMatrix {
 public:
  explicit PmiMatrix(std::size_t n) : n_(n), values_(n * n) {}

  std::size_t size() const noexcept { return n_; }
  const std::optional<double>& at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v);

  std::size_t present_count() const;

 private:
  std::size_t n_;
  std::vector<std::optional<double>> values_;
};

PmiMatrix pmi(const CooccurrenceCounts& counts);

struct WeightedEdge {
  std::size_t to;
  double weight;
};

// Undirected weighted graph over class indices.
class CooccurrenceGraph {
 public:
  explicit CooccurrenceGraph(std::size_t nodes) : adjacency_(nodes) {}

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const;
  std::span<const WeightedEdge> neighbors(std::size_t u) const { return adjacency_[u]; }
  std::optional<double> weight(std::size_t u, std::size_t v) const;

  /// Adds u-v in both directions; rejects self-loops and non-positive weights.
  void add_edge(std::size_t u, std::size_t v, double w);

 private:
  std::vector<std::vector<WeightedEdge>> adjacency_;
};

// Zero-centers present PMI entries (mean over unordered pairs) and keeps
// edges whose centered weight is strictly positive. Throws ConfigError when
// no entry is present. A result without edges is valid.
CooccurrenceGraph build_cooccurrence_graph(const PmiMatrix& pmi_matrix);

using Walk = std::vector<std::size_t>;

/// walks_per_node walks from every node; a node without edges ends its walk.
std::vector<Walk> simulate_walks(const CooccurrenceGraph& graph, std::size_t walk_length,
                                 std::size_t walks_per_node, Rng& rng);

struct EmbeddingTrainingConfig {
  std::size_t dim = 64;
  std::size_t context_window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;
};

// Skip-gram loss for one (center, context) pair with sampled negatives,
// using one shared table: -log s(ctx.ctr) - sum log s(-neg.ctr).
struct SgnsPairGrad {
  double loss = 0.0;
  Vector center;
  Vector context;
  std::vector<Vector> negatives;
};

SgnsPairGrad sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                            std::span<const Vector> negatives);

/// Rows = classes (node count); nodes absent from every walk keep their random init.
Matrix train_name_embeddings(std::span<const Walk> walks, std::size_t node_count,
                             const EmbeddingTrainingConfig& cfg, Rng& rng);

// Maps each name embedding through a randomly initialized single-hidden-layer
// tanh network into R^d, then scales each row to unit norm. Equal embeddings give
// equal rows.
Matrix init_label_table(const Matrix& name_embeddings, std::size_t dim, Rng& rng);

/// Table used when semantic pretraining is disabled: N(0, scale^2) entries.
Matrix random_label_table(std::size_t classes, std::size_t dim, Rng& rng, double scale = 0.1);

struct PretrainConfig {
  std::size_t walk_length = 10;
  std::size_t walks_per_node = 10;
  EmbeddingTrainingConfig embedding;
};

struct PretrainResult {
  CooccurrenceCounts counts;
  CooccurrenceGraph graph{0};
  Matrix embeddings;
  bool fell_back_to_random = false;  // graph had no edges
};

/// counts -> PMI -> graph -> walks -> embeddings.
PretrainResult pretrain_label_embeddings(const CooccurrenceCounts& counts, const PretrainConfig& cfg, Rng& rng);

// Embedding file: one class per line, `id v1 ... vd`, shortest round-trip reals.
void write_embeddings(std::ostream& out, const LabelSpace& labels, const Matrix& embeddings);
Matrix read_embeddings(std::istream& in, const LabelSpace& labels);

/// Synthetic corpus: each segment names one to three labels drawn from a
/// single cluster, padded with filler words. Used by tests and desk-scale runs.
std::vector<std::string> synthetic_corpus(const LabelSpace& labels,
                                          std::span<const std::vector<std::size_t>> clusters,
                                          std::size_t segments, Rng& rng);

}  // namespace fedalign

#endif  // FEDALIGN_LABEL_PRETRAIN_HPP_
