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

#include "fedalign/label_pretrain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "fedalign/errors.hpp"
#include "fedalign/text_io.hpp"

namespace fedalign {

Words tokenize(std::string_view text) {
  Words out;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch) || ch >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::optional<std::size_t> LabelSpace::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return i;
  }
  return std::nullopt;
}

void LabelSpace::add(std::string id, Words name, std::size_t window) {
  if (window == 0) window = 2 * name.size();
  ids.push_back(std::move(id));
  names.push_back(std::move(name));
  windows.push_back(window);
}

void LabelSpace::validate() const {
  if (names.size() != ids.size() || windows.size() != ids.size()) {
    throw ConfigError("LabelSpace: inconsistent field lengths");
  }
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) throw ConfigError("LabelSpace: empty class id");
    if (!seen.insert(ids[i]).second) throw ConfigError("LabelSpace: duplicate class id '" + ids[i] + "'");
    if (names[i].empty()) throw ConfigError("LabelSpace: class '" + ids[i] + "' has an empty name");
    if (windows[i] < names[i].size()) {
      throw ConfigError("LabelSpace: window for '" + ids[i] + "' is shorter than its name");
    }
  }
}

LabelSpace LabelSpace::from_ids(std::vector<std::string> ids) {
  LabelSpace ls;
  for (auto& id : ids) {
    Words name = tokenize(id);
    if (name.empty()) name.push_back(id);
    ls.add(std::move(id), std::move(name));
  }
  return ls;
}

LabelSpace read_label_space(std::istream& in) {
  LabelSpace ls;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_on(t, '\t');
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError("expected 'id<TAB>name[<TAB>window]'", line_no);
    }
    const std::string id(trim(fields[0]));
    Words name = tokenize(fields[1]);
    if (id.empty() || name.empty()) throw ParseError("empty class id or name", line_no);
    std::size_t window = 0;
    if (fields.size() == 3) {
      window = parse_count(trim(fields[2]), line_no);
      if (window < name.size()) throw ParseError("window shorter than the label name", line_no);
    }
    if (ls.index_of(id)) throw ParseError("duplicate class id '" + id + "'", line_no);
    ls.add(id, std::move(name), window);
  }
  ls.validate();
  return ls;
}

void write_label_space(std::ostream& out, const LabelSpace& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels.ids[i] << '\t';
    for (std::size_t w = 0; w < labels.names[i].size(); ++w) {
      if (w) out << ' ';
      out << labels.names[i][w];
    }
    out << '\t' << labels.windows[i] << '\n';
  }
}

bool match_label_in_segment(std::span<const std::string> segment, std::span<const std::string> label_name,
                            std::size_t window) {
  if (label_name.empty() || segment.empty() || window < label_name.size()) return false;
  std::unordered_map<std::string_view, int> need;
  for (const auto& w : label_name) ++need[w];
  const std::size_t width = std::min(window, segment.size());
  if (width < label_name.size()) return false;

  std::unordered_map<std::string_view, int> have;
  std::size_t satisfied = 0;  // distinct words whose count is met
  auto push = [&](std::string_view w) {
    auto it = need.find(w);
    if (it == need.end()) return;
    if (++have[w] == it->second) ++satisfied;
  };
  auto pop = [&](std::string_view w) {
    auto it = need.find(w);
    if (it == need.end()) return;
    if (have[w]-- == it->second) --satisfied;
  };

  for (std::size_t i = 0; i < segment.size(); ++i) {
    push(segment[i]);
    if (i >= width) pop(segment[i - width]);
    if (i + 1 >= width && satisfied == need.size()) return true;
  }
  return false;
}

double CooccurrenceCounts::p(std::size_t i) const {
  return static_cast<double>(occurrences[i]) / static_cast<double>(segment_count);
}

double CooccurrenceCounts::p(std::size_t i, std::size_t j) const {
  return static_cast<double>(joint[i][j]) / static_cast<double>(segment_count);
}

CooccurrenceCounter::CooccurrenceCounter(const LabelSpace& labels) : labels_(&labels) {
  labels.validate();
  counts_.occurrences.assign(labels.size(), 0);
  counts_.joint.assign(labels.size(), std::vector<std::size_t>(labels.size(), 0));
}

void CooccurrenceCounter::add_segment(std::span<const std::string> segment) {
  ++counts_.segment_count;
  present_.clear();
  for (std::size_t c = 0; c < labels_->size(); ++c) {
    if (match_label_in_segment(segment, labels_->names[c], labels_->windows[c])) present_.push_back(c);
  }
  for (std::size_t a : present_) {
    ++counts_.occurrences[a];
    for (std::size_t b : present_) ++counts_.joint[a][b];
  }
}

CooccurrenceCounts CooccurrenceCounter::finish() const {
  if (counts_.segment_count == 0) throw ConfigError("empty corpus: PMI is undefined");
  return counts_;
}

CooccurrenceCounts count_cooccurrences(std::span<const Words> corpus, const LabelSpace& labels) {
  CooccurrenceCounter counter(labels);
  for (const auto& seg : corpus) counter.add_segment(seg);
  return counter.finish();
}

CooccurrenceCounts count_cooccurrences(std::istream& corpus, const LabelSpace& labels) {
  CooccurrenceCounter counter(labels);
  std::string line;
  while (std::getline(corpus, line)) counter.add_text(line);
  return counter.finish();
}

void PmiMatrix::set(std::size_t i, std::size_t j, double v) {
  values_[i * n_ + j] = v;
  values_[j * n_ + i] = v;
}

std::size_t PmiMatrix::present_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) n += at(i, j).has_value();
  }
  return n;
}

PmiMatrix pmi(const CooccurrenceCounts& counts) {
  if (counts.segment_count == 0) throw ConfigError("pmi: zero segments");
  const std::size_t n = counts.occurrences.size();
  PmiMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (counts.joint[i][j] == 0) continue;
      m.set(i, j, std::log(counts.p(i, j) / (counts.p(i) * counts.p(j))));
    }
  }
  return m;
}

std::size_t CooccurrenceGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& adj : adjacency_) n += adj.size();
  return n / 2;
}

std::optional<double> CooccurrenceGraph::weight(std::size_t u, std::size_t v) const {
  for (const auto& e : adjacency_[u]) {
    if (e.to == v) return e.weight;
  }
  return std::nullopt;
}

void CooccurrenceGraph::add_edge(std::size_t u, std::size_t v, double w) {
  if (u == v) throw ConfigError("CooccurrenceGraph: self-loop");
  if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("CooccurrenceGraph: edge weight must be positive");
  adjacency_[u].push_back({v, w});
  adjacency_[v].push_back({u, w});
}

CooccurrenceGraph build_cooccurrence_graph(const PmiMatrix& pmi_matrix) {
  const std::size_t n = pmi_matrix.size();
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (const auto& v = pmi_matrix.at(i, j)) {
        sum += *v;
        ++present;
      }
    }
  }
  if (present == 0) throw ConfigError("build_cooccurrence_graph: no label pair co-occurs");
  const double mean = sum / static_cast<double>(present);
  CooccurrenceGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& v = pmi_matrix.at(i, j);
      if (!v) continue;
      const double w = *v - mean;
      if (w > 0.0) g.add_edge(i, j, w);
    }
  }
  return g;
}

std::vector<Walk> simulate_walks(const CooccurrenceGraph& graph, std::size_t walk_length,
                                 std::size_t walks_per_node, Rng& rng) {
  if (walk_length == 0) throw ConfigError("simulate_walks: walk_length must be >= 1");
  const std::uint64_t base = rng.next_u64();
  std::vector<Walk> walks;
  walks.reserve(graph.node_count() * walks_per_node);
  for (std::size_t start = 0; start < graph.node_count(); ++start) {
    Rng node_rng(Rng::derive(base, start));
    for (std::size_t w = 0; w < walks_per_node; ++w) {
      Walk walk{start};
      while (walk.size() < walk_length) {
        const auto edges = graph.neighbors(walk.back());
        if (edges.empty()) break;
        double total = 0.0;
        for (const auto& e : edges) total += e.weight;
        double draw = node_rng.uniform() * total;
        std::size_t next = edges.back().to;
        for (const auto& e : edges) {
          if (draw < e.weight) {
            next = e.to;
            break;
          }
          draw -= e.weight;
        }
        walk.push_back(next);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

Matrix random_embedding_init(std::size_t rows, std::size_t dim, Rng& rng) {
  Matrix m(rows, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : m.values()) v = rng.uniform(-0.5, 0.5) * scale;
  return m;
}

}  // namespace

SgnsPairGrad sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                            std::span<const Vector> negatives) {
  const std::size_t d = center.size();
  SgnsPairGrad g;
  g.center.assign(d, 0.0);
  g.context.assign(d, 0.0);

  const double pos = dot(center, context);
  g.loss = -log_sigmoid(pos);
  const double pos_coef = sigmoid(pos) - 1.0;  // d(-log s(x))/dx
  for (std::size_t k = 0; k < d; ++k) {
    g.center[k] += pos_coef * context[k];
    g.context[k] += pos_coef * center[k];
  }
  g.negatives.reserve(negatives.size());
  for (const auto& neg : negatives) {
    const double s = dot(center, neg);
    g.loss -= log_sigmoid(-s);
    const double coef = sigmoid(s);  // d(-log s(-x))/dx
    Vector gn(d);
    for (std::size_t k = 0; k < d; ++k) {
      g.center[k] += coef * neg[k];
      gn[k] = coef * center[k];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

Matrix train_name_embeddings(std::span<const Walk> walks, std::size_t node_count,
                             const EmbeddingTrainingConfig& cfg, Rng& rng) {
  if (cfg.dim == 0) throw ConfigError("train_name_embeddings: embedding dimension must be >= 1");
  if (node_count == 0) throw ConfigError("train_name_embeddings: no nodes");
  const bool any_pair = std::any_of(walks.begin(), walks.end(), [](const Walk& w) { return w.size() >= 2; });
  if (!any_pair) throw ConfigError("train_name_embeddings: need a walk with at least two nodes");
  for (const auto& w : walks) {
    for (std::size_t v : w) {
      if (v >= node_count) throw ConfigError("train_name_embeddings: walk node out of range");
    }
  }

  Matrix table = random_embedding_init(node_count, cfg.dim, rng);
  std::vector<std::size_t> order(walks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<std::size_t> neg_ids;
  std::vector<Vector> neg_vecs;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t wi : order) {
      const Walk& walk = walks[wi];
      for (std::size_t i = 0; i < walk.size(); ++i) {
        const std::size_t lo = i >= cfg.context_window ? i - cfg.context_window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + cfg.context_window);
        for (std::size_t j = lo; j <= hi; ++j) {
          const std::size_t ctr = walk[i];
          const std::size_t ctx = walk[j];
          if (j == i || ctr == ctx) continue;

          // uniform over nodes other than the positive pair
          neg_ids.clear();
          neg_vecs.clear();
          if (node_count > 2) {
            for (std::size_t k = 0; k < cfg.negatives; ++k) {
              std::size_t v = rng.uniform_index(node_count - 2);
              const std::size_t a = std::min(ctr, ctx);
              const std::size_t b = std::max(ctr, ctx);
              if (v >= a) ++v;
              if (v >= b) ++v;
              neg_ids.push_back(v);
              auto r = table.row(v);
              neg_vecs.emplace_back(r.begin(), r.end());
            }
          }
          const auto ctr_row = table.row(ctr);
          const auto ctx_row = table.row(ctx);
          const Vector ctr_vec(ctr_row.begin(), ctr_row.end());
          const Vector ctx_vec(ctx_row.begin(), ctx_row.end());
          const SgnsPairGrad g = sgns_pair_loss(ctr_vec, ctx_vec, neg_vecs);
          sgd_step(table.row(ctr), g.center, cfg.lr, "label embedding training");
          sgd_step(table.row(ctx), g.context, cfg.lr, "label embedding training");
          for (std::size_t k = 0; k < neg_ids.size(); ++k) {
            sgd_step(table.row(neg_ids[k]), g.negatives[k], cfg.lr, "label embedding training");
          }
        }
      }
    }
  }
  return table;
}

Matrix init_label_table(const Matrix& name_embeddings, std::size_t dim, Rng& rng) {
  if (dim == 0) throw ConfigError("init_label_table: dimension must be >= 1");
  const std::size_t widths[] = {name_embeddings.cols(), dim, dim};
  const MlpParams projection = make_mlp(widths, Activation::kTanh, rng);
  Matrix table(name_embeddings.rows(), dim);
  for (std::size_t c = 0; c < name_embeddings.rows(); ++c) {
    Vector r = mlp_output(projection, name_embeddings.row(c));
    // unit rows keep the initial logit scale comparable to a random table
    const double norm = l2_norm(r);
    if (norm > 0.0) {
      for (double& v : r) v /= norm;
    }
    std::copy(r.begin(), r.end(), table.row(c).begin());
  }
  return table;
}

Matrix random_label_table(std::size_t classes, std::size_t dim, Rng& rng, double scale) {
  Matrix table(classes, dim);
  for (double& v : table.values()) v = rng.normal(0.0, scale);
  return table;
}

PretrainResult pretrain_label_embeddings(const CooccurrenceCounts& counts, const PretrainConfig& cfg, Rng& rng) {
  PretrainResult out;
  out.counts = counts;
  const std::size_t n = counts.occurrences.size();
  const PmiMatrix m = pmi(counts);
  if (m.present_count() > 0) out.graph = build_cooccurrence_graph(m);
  else out.graph = CooccurrenceGraph(n);

  if (out.graph.edge_count() == 0) {
    out.fell_back_to_random = true;
    out.embeddings = random_embedding_init(n, cfg.embedding.dim, rng);
    return out;
  }
  const auto walks = simulate_walks(out.graph, cfg.walk_length, cfg.walks_per_node, rng);
  out.embeddings = train_name_embeddings(walks, n, cfg.embedding, rng);
  return out;
}

void write_embeddings(std::ostream& out, const LabelSpace& labels, const Matrix& embeddings) {
  if (embeddings.rows() != labels.size()) throw ConfigError("write_embeddings: row count mismatch");
  for (std::size_t c = 0; c < labels.size(); ++c) {
    out << labels.ids[c];
    for (double v : embeddings.row(c)) out << ' ' << format_real(v);
    out << '\n';
  }
}

Matrix read_embeddings(std::istream& in, const LabelSpace& labels) {
  std::map<std::size_t, Vector> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const auto idx = labels.index_of(tokens[0]);
    if (!idx) throw ParseError("unknown class id '" + std::string(tokens[0]) + "'", line_no);
    if (rows.count(*idx)) throw ParseError("duplicate class id '" + std::string(tokens[0]) + "'", line_no);
    if (tokens.size() < 2) throw ParseError("embedding row has no values", line_no);
    if (dim == 0) dim = tokens.size() - 1;
    if (tokens.size() - 1 != dim) throw ParseError("inconsistent embedding dimension", line_no);
    Vector v;
    for (std::size_t k = 1; k < tokens.size(); ++k) v.push_back(parse_real(tokens[k], line_no));
    rows.emplace(*idx, std::move(v));
  }
  if (rows.size() != labels.size()) throw ParseError("embedding file does not cover every class", 0);
  Matrix m(labels.size(), dim);
  for (const auto& [c, v] : rows) std::copy(v.begin(), v.end(), m.row(c).begin());
  return m;
}

std::vector<std::string> synthetic_corpus(const LabelSpace& labels,
                                          std::span<const std::vector<std::size_t>> clusters,
                                          std::size_t segments, Rng& rng) {
  static constexpr std::string_view kFiller[] = {"the", "a",   "of",    "and",  "then", "was",
                                                 "it",  "day", "later", "with", "some", "there"};
  if (clusters.empty()) throw ConfigError("synthetic_corpus: no clusters");
  for (const auto& cl : clusters) {
    if (cl.empty()) throw ConfigError("synthetic_corpus: empty cluster");
    for (std::size_t c : cl) {
      if (c >= labels.size()) throw ConfigError("synthetic_corpus: class index out of range");
    }
  }
  auto append_name = [&](std::vector<std::string>& words, std::size_t c) {
    words.insert(words.end(), labels.names[c].begin(), labels.names[c].end());
  };
  auto filler = [&](std::vector<std::string>& words, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) words.emplace_back(kFiller[rng.uniform_index(std::size(kFiller))]);
  };

  std::vector<std::string> out;
  out.reserve(segments);
  for (std::size_t s = 0; s < segments; ++s) {
    std::vector<std::string> words;
    filler(words, 1 + rng.uniform_index(3));
    if (clusters.size() > 1 && rng.uniform() < 0.1) {
      // occasional cross-cluster mention keeps inter-cluster PMI defined and low
      const std::size_t a = rng.uniform_index(clusters.size());
      std::size_t b = rng.uniform_index(clusters.size() - 1);
      if (b >= a) ++b;
      append_name(words, clusters[a][rng.uniform_index(clusters[a].size())]);
      filler(words, 1 + rng.uniform_index(2));
      append_name(words, clusters[b][rng.uniform_index(clusters[b].size())]);
    } else {
      std::vector<std::size_t> members = clusters[rng.uniform_index(clusters.size())];
      rng.shuffle(members);
      const std::size_t take = std::min(members.size(), 1 + rng.uniform_index(3));
      for (std::size_t k = 0; k < take; ++k) {
        if (k) filler(words, 1 + rng.uniform_index(2));
        append_name(words, members[k]);
      }
    }
    filler(words, 1 + rng.uniform_index(3));
    std::string line;
    for (const auto& w : words) {
      if (!line.empty()) line.push_back(' ');
      line += w;
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace fedalign
