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

#include "fedalign/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fedalign/errors.hpp"
#include "fedalign/text_io.hpp"

namespace fedalign {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

void ExperimentConfig::validate() const {
  if (data.kind == DataSourceKind::kSynthetic) {
    data.synthetic.validate();
  } else {
    if (data.train_path.empty() || data.test_path.empty()) {
      throw ConfigError("[data] file source needs 'train' and 'test' paths");
    }
    for (const auto& p : {data.train_path, data.test_path}) {
      if (!fs::exists(p)) throw ConfigError("dataset file '" + p.string() + "' does not exist");
    }
    if (!data.labels_path.empty() && !fs::exists(data.labels_path)) {
      throw ConfigError("label-name file '" + data.labels_path.string() + "' does not exist");
    }
  }
  if (partition.clients == 0) throw ConfigError("[partition] clients must be >= 1");
  if (partition.kind == PartitionKind::kShards && partition.groups.size() != partition.clients) {
    throw ConfigError("[partition] shards needs one class set per client in 'groups'");
  }
  if (model.dim == 0 || model.hidden == 0) throw ConfigError("[model] dim and hidden must be >= 1");
  if (pretrain.enabled) {
    if (!pretrain.synthetic_corpus && !fs::exists(pretrain.corpus_path)) {
      throw ConfigError("corpus file '" + pretrain.corpus_path.string() + "' does not exist");
    }
    if (pretrain.synthetic_corpus && pretrain.corpus_segments == 0) {
      throw ConfigError("[pretrain] corpus_segments must be >= 1");
    }
    if (pretrain.params.embedding.dim == 0) throw ConfigError("[pretrain] embedding_dim must be >= 1");
    if (pretrain.params.walk_length == 0) throw ConfigError("[pretrain] walk_length must be >= 1");
  }
  federation.validate(partition.clients);
}

namespace {

using KeySet = std::set<std::string>;

const std::map<std::string, KeySet>& known_keys() {
  static const std::map<std::string, KeySet> keys = {
      {"experiment", {"seed", "method", "output", "checkpoint_every"}},
      {"data",
       {"source", "task", "classes", "samples_per_class", "feature_dim", "spread", "noise", "positives_per_sample",
        "train", "test", "labels"}},
      {"partition", {"kind", "clients", "groups", "identified_per_client"}},
      {"federation", {"rounds", "clients_per_round", "eval_every", "weighted_average", "parallel"}},
      {"client",
       {"epochs", "lr", "alpha", "q1", "q2", "batch_size", "mu", "rs_alpha", "distill_every_epoch", "no_semantic",
        "no_distillation", "no_alternation"}},
      {"model", {"dim", "hidden", "activation"}},
      {"pretrain",
       {"enabled", "corpus", "corpus_segments", "corpus_clusters", "walk_length", "walks_per_node", "context_window",
        "negatives", "embedding_dim", "epochs", "lr"}},
  };
  return keys;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return std::string(trim(*v));
  }

  std::string str(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    auto v = raw(key);
    return v ? wrap([&] { return parse_count(*v); }, key) : fallback;
  }

  double real(const std::string& key, double fallback) const {
    auto v = raw(key);
    return v ? wrap([&] { return parse_real(*v); }, key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("[" + name_ + "] " + key + ": expected a boolean, got '" + *v + "'");
  }

  // "0 1 | 2 3" -> {{0,1},{2,3}}
  std::vector<std::vector<std::size_t>> groups(const std::string& key) const {
    std::vector<std::vector<std::size_t>> out;
    auto v = raw(key);
    if (!v || v->empty()) return out;
    for (auto part : split_on(*v, '|')) {
      std::vector<std::size_t> g;
      for (auto tok : split_ws(part)) g.push_back(wrap([&] { return parse_count(tok); }, key));
      if (g.empty()) throw ConfigError("[" + name_ + "] " + key + ": empty group");
      out.push_back(std::move(g));
    }
    return out;
  }

 private:
  template <typename F>
  auto wrap(F f, const std::string& key) const -> decltype(f()) {
    try {
      return f();
    } catch (const ParseError& e) {
      throw ConfigError("[" + name_ + "] " + key + ": " + e.what());
    }
  }

  const pt::ptree* tree_;
  std::string name_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  ExperimentConfig cfg;
  const Section exp = section("experiment");
  const auto seed = exp.raw("seed");
  if (!seed) throw ConfigError("config: [experiment] seed is required");
  try {
    const long long s = parse_int(*seed);
    if (s < 0) throw ConfigError("config: seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config: seed: ") + e.what());
  }
  cfg.output_dir = resolve(base_dir, exp.str("output", "out"));
  cfg.checkpoint_every = exp.count("checkpoint_every", 0);
  cfg.federation.client.method = method_from_string(exp.str("method", "fedalign"));

  const Section data = section("data");
  const std::string source = data.str("source", "synthetic");
  const TaskKind task = task_kind_from_string(data.str("task", "single_label"));
  if (source == "synthetic") {
    cfg.data.kind = DataSourceKind::kSynthetic;
    auto& s = cfg.data.synthetic;
    s.task = task;
    s.classes = data.count("classes", s.classes);
    s.samples_per_class = data.count("samples_per_class", s.samples_per_class);
    s.feature_dim = data.count("feature_dim", s.feature_dim);
    s.spread = data.real("spread", s.spread);
    s.noise = data.real("noise", s.noise);
    s.positives_per_sample = data.count("positives_per_sample", s.positives_per_sample);
  } else if (source == "file") {
    cfg.data.kind = DataSourceKind::kFile;
    cfg.data.train_path = resolve(base_dir, data.str("train", ""));
    cfg.data.test_path = resolve(base_dir, data.str("test", ""));
    if (auto l = data.raw("labels")) cfg.data.labels_path = resolve(base_dir, *l);
  } else {
    throw ConfigError("config: [data] source must be 'synthetic' or 'file'");
  }

  const Section part = section("partition");
  const std::string kind = part.str("kind", "class_groups");
  if (kind == "class_groups") cfg.partition.kind = PartitionKind::kClassGroups;
  else if (kind == "random") cfg.partition.kind = PartitionKind::kRandomIdentified;
  else if (kind == "shards") cfg.partition.kind = PartitionKind::kShards;
  else throw ConfigError("config: [partition] kind must be 'class_groups', 'random' or 'shards'");
  cfg.partition.clients = part.count("clients", cfg.partition.clients);
  cfg.partition.groups = part.groups("groups");
  cfg.partition.identified_per_client = part.count("identified_per_client", cfg.partition.identified_per_client);
  cfg.data.synthetic.clients = cfg.partition.clients;

  const Section fed = section("federation");
  auto& f = cfg.federation;
  f.rounds = fed.count("rounds", f.rounds);
  f.clients_per_round = fed.count("clients_per_round", f.clients_per_round);
  f.eval_every = fed.count("eval_every", f.eval_every);
  f.weighted_encoder_average = fed.flag("weighted_average", f.weighted_encoder_average);
  f.parallel_clients = fed.flag("parallel", f.parallel_clients);

  const Section cl = section("client");
  auto& c = f.client;
  c.epochs = cl.count("epochs", c.epochs);
  c.lr = cl.real("lr", c.lr);
  c.alpha = cl.real("alpha", c.alpha);
  c.q1 = cl.real("q1", c.q1);
  c.q2 = cl.real("q2", c.q2);
  c.batch_size = cl.count("batch_size", c.batch_size);
  c.mu = cl.real("mu", c.mu);
  c.rs_alpha = cl.real("rs_alpha", c.rs_alpha);
  c.distill_every_epoch = cl.flag("distill_every_epoch", c.distill_every_epoch);
  c.ablation.no_semantic = cl.flag("no_semantic", false);
  c.ablation.no_distillation = cl.flag("no_distillation", false);
  c.ablation.no_alternation = cl.flag("no_alternation", false);

  const Section mod = section("model");
  cfg.model.dim = mod.count("dim", cfg.model.dim);
  cfg.model.hidden = mod.count("hidden", cfg.model.hidden);
  cfg.model.activation = activation_from_string(mod.str("activation", "relu"));

  const Section pre = section("pretrain");
  auto& p = cfg.pretrain;
  p.enabled = pre.flag("enabled", p.enabled);
  const std::string corpus = pre.str("corpus", "synthetic");
  p.synthetic_corpus = corpus == "synthetic";
  if (!p.synthetic_corpus) p.corpus_path = resolve(base_dir, corpus);
  p.corpus_segments = pre.count("corpus_segments", p.corpus_segments);
  p.corpus_clusters = pre.groups("corpus_clusters");
  p.params.walk_length = pre.count("walk_length", p.params.walk_length);
  p.params.walks_per_node = pre.count("walks_per_node", p.params.walks_per_node);
  p.params.embedding.context_window = pre.count("context_window", p.params.embedding.context_window);
  p.params.embedding.negatives = pre.count("negatives", p.params.embedding.negatives);
  p.params.embedding.dim = pre.count("embedding_dim", p.params.embedding.dim);
  p.params.embedding.epochs = pre.count("epochs", p.params.embedding.epochs);
  p.params.embedding.lr = pre.real("lr", p.params.embedding.lr);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_experiment_config(in, path.parent_path());
}

void write_history(std::ostream& out, const RoundHistory& history) {
  if (history.empty()) throw ProtocolError("write_history: empty history");
  out << "round,train_loss,macro_f1,macro_acc\n";
  for (const auto& r : history) {
    out << r.round << ',' << format_fixed(r.train_loss, 6) << ',';
    if (r.macro_f1) out << format_fixed(*r.macro_f1, 6);
    out << ',';
    if (r.macro_accuracy) out << format_fixed(*r.macro_accuracy, 6);
    out << '\n';
  }
}

namespace {

template <typename Fn>
void write_file(const fs::path& path, Fn fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  fn(out);
  out.flush();
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

}  // namespace

void write_history(const fs::path& path, const RoundHistory& history) {
  write_file(path, [&](std::ostream& o) { write_history(o, history); });
}

RoundHistory read_history(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "round,train_loss,macro_f1,macro_acc") {
    throw ParseError("history: unexpected header", 1);
  }
  RoundHistory h;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_on(line, ',');
    if (f.size() != 4) throw ParseError("history: expected 4 fields", line_no);
    RoundRecord r;
    r.round = parse_count(f[0], line_no);
    r.train_loss = parse_real(f[1], line_no);
    if (!f[2].empty()) r.macro_f1 = parse_real(f[2], line_no);
    if (!f[3].empty()) r.macro_accuracy = parse_real(f[3], line_no);
    h.push_back(std::move(r));
  }
  return h;
}

void write_checkpoint(std::ostream& out, const GlobalModel& model, std::size_t round) {
  model.validate();
  auto row = [&](std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (k) out << ' ';
      out << format_real(values[k]);
    }
    out << '\n';
  };
  out << "fedalign-checkpoint 1\n";
  out << "round " << round << '\n';
  out << "task " << to_string(model.task) << '\n';
  out << "activation " << to_string(model.data_encoder.activation) << '\n';
  out << "encoder_layers " << model.data_encoder.layers.size() << '\n';
  for (const auto& l : model.data_encoder.layers) {
    out << "layer " << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    row(l.weight.values());
    row(l.bias);
  }
  out << "label_table " << model.label_table.rows() << ' ' << model.label_table.cols() << '\n';
  for (std::size_t c = 0; c < model.label_table.rows(); ++c) row(model.label_table.row(c));
}

void write_checkpoint(const fs::path& path, const GlobalModel& model, std::size_t round) {
  write_file(path, [&](std::ostream& o) { write_checkpoint(o, model, round); });
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) throw ParseError("checkpoint: unexpected end of file", line_no + 1);
    ++line_no;
    return split_ws(line);
  };
  auto keyed = [&](std::string_view key, std::size_t args) {
    auto t = next();
    if (t.size() != args + 1 || t[0] != key) {
      throw ParseError("checkpoint: expected '" + std::string(key) + "' line", line_no);
    }
    return t;
  };
  auto reals = [&](std::size_t n) {
    auto t = next();
    if (t.size() != n) throw ParseError("checkpoint: expected " + std::to_string(n) + " values", line_no);
    std::vector<double> v;
    v.reserve(n);
    for (auto tok : t) v.push_back(parse_real(tok, line_no));
    return v;
  };

  if (keyed("fedalign-checkpoint", 1)[1] != "1") throw ParseError("checkpoint: unsupported version", line_no);
  Checkpoint cp;
  cp.round = parse_count(keyed("round", 1)[1], line_no);
  try {
    cp.model.task = task_kind_from_string(keyed("task", 1)[1]);
    cp.model.data_encoder.activation = activation_from_string(keyed("activation", 1)[1]);
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), line_no);
  }
  const std::size_t layers = parse_count(keyed("encoder_layers", 1)[1], line_no);
  for (std::size_t k = 0; k < layers; ++k) {
    const auto t = keyed("layer", 2);
    const std::size_t rows = parse_count(t[1], line_no);
    const std::size_t cols = parse_count(t[2], line_no);
    Matrix w(rows, cols, reals(rows * cols));
    cp.model.data_encoder.layers.push_back({std::move(w), reals(rows)});
  }
  const auto t = keyed("label_table", 2);
  const std::size_t rows = parse_count(t[1], line_no);
  const std::size_t cols = parse_count(t[2], line_no);
  std::vector<double> table;
  table.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = reals(cols);
    table.insert(table.end(), v.begin(), v.end());
  }
  cp.model.label_table = Matrix(rows, cols, std::move(table));
  try {
    cp.model.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
  return cp;
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  if (cfg.data.kind == DataSourceKind::kSynthetic) {
    Rng rng(Rng::derive(cfg.seed, 1));
    TrainTest tt = generate_synthetic(cfg.data.synthetic, rng);
    d.train = std::move(tt.train);
    d.test = std::move(tt.test);
  } else {
    d.train = load_dataset(cfg.data.train_path.string());
    d.test = load_dataset(cfg.data.test_path.string());
    if (d.train.labels.ids != d.test.labels.ids || d.train.task != d.test.task) {
      throw ConfigError("train and test files disagree on classes or task");
    }
    if (d.train.feature_dim() != d.test.feature_dim()) throw ConfigError("train and test feature dims differ");
    if (!cfg.data.labels_path.empty()) {
      std::ifstream in(cfg.data.labels_path);
      LabelSpace names = read_label_space(in);
      if (names.ids != d.train.labels.ids) {
        throw ConfigError("label-name file ids do not match the dataset classes (same order required)");
      }
      d.train.labels = names;
      d.test.labels = std::move(names);
    }
  }
  return d;
}

Partition prepare_partition(const ExperimentConfig& cfg, const Dataset& train) {
  Rng rng(Rng::derive(cfg.seed, 2));
  if (cfg.partition.kind == PartitionKind::kClassGroups) {
    auto groups = cfg.partition.groups;
    if (groups.empty()) {
      groups.emplace_back();
      for (std::size_t c = 0; c < train.class_count(); ++c) groups.back().push_back(c);
    }
    return partition_by_class_groups(train, cfg.partition.clients, groups, rng);
  }
  if (cfg.partition.kind == PartitionKind::kShards) {
    return partition_shards(train, cfg.partition.clients, cfg.partition.groups, rng);
  }
  return partition_random_identified(train, cfg.partition.clients, cfg.partition.identified_per_client, rng);
}

PretrainResult pretrain_labels(const ExperimentConfig& cfg, const LabelSpace& labels) {
  if (!cfg.pretrain.enabled) throw ConfigError("label pretraining is disabled in the config");
  Rng rng(Rng::derive(cfg.seed, 3));
  CooccurrenceCounts counts;
  if (cfg.pretrain.synthetic_corpus) {
    auto clusters = cfg.pretrain.corpus_clusters;
    if (clusters.empty()) {
      clusters.emplace_back();
      for (std::size_t c = 0; c < labels.size(); ++c) clusters.back().push_back(c);
    }
    CooccurrenceCounter counter(labels);
    for (const auto& seg : synthetic_corpus(labels, clusters, cfg.pretrain.corpus_segments, rng)) {
      counter.add_text(seg);
    }
    counts = counter.finish();
  } else {
    std::ifstream in(cfg.pretrain.corpus_path);
    if (!in) throw ConfigError("cannot open corpus '" + cfg.pretrain.corpus_path.string() + "'");
    counts = count_cooccurrences(in, labels);
  }
  return pretrain_label_embeddings(counts, cfg.pretrain.params, rng);
}

GlobalModel build_initial_model(const ExperimentConfig& cfg, const Dataset& train,
                                const std::optional<Matrix>& name_embeddings) {
  GlobalModel m;
  m.task = train.task;
  Rng enc_rng(Rng::derive(cfg.seed, 5));
  const std::size_t widths[] = {train.feature_dim(), cfg.model.hidden, cfg.model.dim};
  m.data_encoder = make_mlp(widths, cfg.model.activation, enc_rng);

  Rng table_rng(Rng::derive(cfg.seed, 4));
  const auto& c = cfg.federation.client;
  const bool semantic = c.method == Method::kFedAlign && !c.ablation.no_semantic && name_embeddings.has_value();
  if (semantic) {
    m.label_table = init_label_table(*name_embeddings, cfg.model.dim, table_rng);
  } else {
    m.label_table = random_label_table(train.class_count(), cfg.model.dim, table_rng,
                                       1.0 / std::sqrt(static_cast<double>(cfg.model.dim)));
  }
  m.validate();
  return m;
}

namespace {

std::string checkpoint_name(std::size_t round) {
  std::ostringstream s;
  s << "checkpoint_round_";
  s.width(4);
  s.fill('0');
  s << round << ".txt";
  return s.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs) {
  cfg.validate();
  ExperimentResult res;
  const ExperimentData data = prepare_data(cfg);
  if (cfg.data.kind == DataSourceKind::kSynthetic && cfg.partition.kind != PartitionKind::kRandomIdentified) {
    // groups index synthetic classes directly; catch typos before partitioning
    for (const auto& g : cfg.partition.groups) {
      for (std::size_t c : g) {
        if (c >= data.train.class_count()) throw ConfigError("[partition] groups: class index out of range");
      }
    }
  }
  res.partition = prepare_partition(cfg, data.train);
  for (std::size_t c : res.partition.identified_without_positive) {
    res.warnings.push_back("class " + data.train.labels.ids[c] + " is identified by a client without local positives");
  }
  for (std::size_t c : res.partition.unidentified_classes) {
    res.warnings.push_back("class " + data.train.labels.ids[c] + " is identified by no client");
  }

  if (write_outputs) fs::create_directories(cfg.output_dir);

  std::optional<Matrix> embeddings;
  const auto& ccfg = cfg.federation.client;
  const bool wants_semantic = ccfg.method == Method::kFedAlign && !ccfg.ablation.no_semantic;
  if (cfg.pretrain.enabled && wants_semantic) {
    PretrainResult pre = pretrain_labels(cfg, data.train.labels);
    if (pre.fell_back_to_random) {
      res.warnings.push_back("label co-occurrence graph has no edges; label embeddings are random");
    }
    if (write_outputs) {
      write_file(cfg.output_dir / "label_embeddings.txt",
                 [&](std::ostream& o) { write_embeddings(o, data.train.labels, pre.embeddings); });
    }
    embeddings = std::move(pre.embeddings);
  }
  const GlobalModel initial = build_initial_model(cfg, data.train, embeddings);

  FederationConfig fed = cfg.federation;
  fed.seed = Rng::derive(cfg.seed, 6);
  RoundObserver observer;
  if (write_outputs && cfg.checkpoint_every > 0) {
    observer = [&](const RoundRecord& r, const GlobalModel& m) {
      if (r.round % cfg.checkpoint_every == 0) write_checkpoint(cfg.output_dir / checkpoint_name(r.round), m, r.round);
    };
  }
  res.run = run_federated(fed, res.partition.clients, data.test, initial, observer);
  res.final_metrics = evaluate(res.run.model, data.test);

  if (write_outputs) {
    write_file(cfg.output_dir / "partition.txt",
               [&](std::ostream& o) { write_partition_manifest(o, res.partition, data.train.labels); });
    if (!res.run.history.empty()) write_history(cfg.output_dir / "history.csv", res.run.history);
    const std::size_t last_round = res.run.history.empty() ? 0 : res.run.history.back().round;
    write_checkpoint(cfg.output_dir / "checkpoint_final.txt", res.run.model, last_round);
    write_file(cfg.output_dir / "summary.txt", [&](std::ostream& o) {
      o << "method " << to_string(ccfg.method) << '\n';
      o << "seed " << cfg.seed << '\n';
      o << "rounds_completed " << res.run.history.size() << '\n';
      o << "status " << (res.run.failure ? "diverged" : "ok") << '\n';
      write_metrics_report(o, res.final_metrics, data.train.labels);
    });
    write_file(cfg.output_dir / "run_report.txt", [&](std::ostream& o) {
      for (const auto& w : res.warnings) o << "warning: " << w << '\n';
      if (res.run.failure) o << "error: " << *res.run.failure << '\n';
    });
  }
  return res;
}

}  // namespace fedalign
