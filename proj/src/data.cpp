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

#include "fedalign/data.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "fedalign/errors.hpp"
#include "fedalign/text_io.hpp"

namespace fedalign {

void Dataset::validate() const {
  if (truth.size() != features.size()) throw DataIntegrityError("dataset: feature and label row counts differ");
  if (!subjects.empty() && subjects.size() != features.size()) {
    throw DataIntegrityError("dataset: subject column length differs from sample count");
  }
  const std::size_t dim = feature_dim();
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) {
      throw DataIntegrityError("dataset: sample " + std::to_string(i) + " has inconsistent feature dimension");
    }
    if (!all_finite(features[i])) throw DataIntegrityError("dataset: sample " + std::to_string(i) + " is non-finite");
    if (truth[i].size() != class_count()) {
      throw DataIntegrityError("dataset: sample " + std::to_string(i) + " label vector length mismatch");
    }
    std::size_t positives = 0;
    for (auto b : truth[i]) {
      if (b > 1) throw DataIntegrityError("dataset: label entries must be 0 or 1");
      positives += b;
    }
    if (task == TaskKind::kSingleLabel && positives != 1) {
      throw DataIntegrityError("dataset: single-label sample " + std::to_string(i) + " has " +
                               std::to_string(positives) + " positives");
    }
  }
}

void ClientDataset::validate() const {
  if (labels.size() != features.size() || source_index.size() != features.size()) {
    throw DataIntegrityError("client dataset: column lengths differ");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != identified.universe()) {
      throw DataIntegrityError("client dataset: label vector length mismatch");
    }
    for (std::size_t c = 0; c < labels[i].size(); ++c) {
      const bool known = labels[i][c] != LabelState::kUnknown;
      if (known != identified.contains(c)) {
        throw DataIntegrityError("client " + std::to_string(id) + ": sample " + std::to_string(i) +
                                 " has a label state inconsistent with its class sets at class " +
                                 std::to_string(c));
      }
    }
  }
}

ClientDataset make_client_dataset(std::size_t id, const Dataset& data, std::span<const std::size_t> rows,
                                  const ClassSet& identified) {
  ClientDataset cd;
  cd.id = id;
  cd.identified = identified;
  cd.features.reserve(rows.size());
  cd.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    cd.features.push_back(data.features.at(r));
    TriStateLabels y(data.class_count(), LabelState::kUnknown);
    for (std::size_t c = 0; c < y.size(); ++c) {
      if (identified.contains(c)) y[c] = data.truth[r][c] ? LabelState::kPositive : LabelState::kNegative;
    }
    cd.labels.push_back(std::move(y));
    cd.source_index.push_back(r);
  }
  return cd;
}

void SyntheticSpec::validate() const {
  if (classes == 0 || clients == 0 || samples_per_class == 0 || feature_dim == 0) {
    throw ConfigError("synthetic spec: counts must be >= 1");
  }
  if (!(spread > 0.0)) throw ConfigError("synthetic spec: spread must be > 0");
  if (!(noise >= 0.0)) throw ConfigError("synthetic spec: noise must be >= 0");
  if (task == TaskKind::kMultiLabel && (positives_per_sample == 0 || positives_per_sample > classes)) {
    throw ConfigError("synthetic spec: positives_per_sample must be in [1, classes]");
  }
}

TrainTest generate_synthetic(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  return generate_synthetic(spec, rng);
}

TrainTest generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<std::string> ids;
  for (std::size_t c = 0; c < spec.classes; ++c) ids.push_back("class" + std::to_string(c));
  const LabelSpace labels = LabelSpace::from_ids(std::move(ids));

  TrainTest out;
  out.centers = Matrix(spec.classes, spec.feature_dim);
  for (double& v : out.centers.values()) v = rng.normal(0.0, spec.spread);

  for (Dataset* d : {&out.train, &out.test}) {
    d->labels = labels;
    d->task = spec.task;
  }
  const std::size_t train_per_class = spec.samples_per_class * 4 / 5;
  std::vector<std::size_t> others;
  for (std::size_t anchor = 0; anchor < spec.classes; ++anchor) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      std::vector<std::uint8_t> y(spec.classes, 0);
      y[anchor] = 1;
      if (spec.task == TaskKind::kMultiLabel && spec.positives_per_sample > 1) {
        others.clear();
        for (std::size_t c = 0; c < spec.classes; ++c) {
          if (c != anchor) others.push_back(c);
        }
        rng.shuffle(others);
        for (std::size_t k = 0; k + 1 < spec.positives_per_sample; ++k) y[others[k]] = 1;
      }
      Vector x(spec.feature_dim, 0.0);
      double positives = 0.0;
      for (std::size_t c = 0; c < spec.classes; ++c) {
        if (!y[c]) continue;
        positives += 1.0;
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += out.centers(c, k);
      }
      for (double& v : x) v /= positives;
      if (spec.noise > 0.0) {
        for (double& v : x) v += rng.normal(0.0, spec.noise);
      }
      Dataset& dst = s < train_per_class ? out.train : out.test;
      dst.features.push_back(std::move(x));
      dst.truth.push_back(std::move(y));
    }
  }
  for (Dataset* d : {&out.train, &out.test}) {
    std::vector<std::size_t> perm(d->size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    Dataset shuffled{d->labels, d->task, {}, {}, {}};
    for (std::size_t i : perm) {
      shuffled.features.push_back(std::move(d->features[i]));
      shuffled.truth.push_back(std::move(d->truth[i]));
    }
    *d = std::move(shuffled);
    d->validate();
  }
  return out;
}

std::vector<std::vector<std::size_t>> split_class_groups(std::vector<std::vector<std::size_t>> groups,
                                                         std::size_t num_clients, std::size_t class_count,
                                                         Rng& rng) {
  if (groups.empty()) throw ConfigError("class-group partition: no initial groups");
  if (num_clients < groups.size()) {
    throw ConfigError("class-group partition: " + std::to_string(num_clients) + " clients for " +
                      std::to_string(groups.size()) + " initial groups");
  }
  if (class_count < num_clients) throw ConfigError("class-group partition: fewer classes than clients");
  std::vector<int> owner(class_count, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ConfigError("class-group partition: empty initial group");
    for (std::size_t c : groups[g]) {
      if (c >= class_count) throw ConfigError("class-group partition: class index out of range");
      if (owner[c] != -1) throw ConfigError("class-group partition: groups overlap at class " + std::to_string(c));
      owner[c] = static_cast<int>(g);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw ConfigError("class-group partition: groups do not cover every class");
  }

  while (groups.size() < num_clients) {
    std::size_t largest = 0;
    for (std::size_t g = 1; g < groups.size(); ++g) {
      if (groups[g].size() > groups[largest].size()) largest = g;
    }
    std::vector<std::size_t> members = groups[largest];
    if (members.size() < 2) throw ConfigError("class-group partition: cannot split a single-class group");
    rng.shuffle(members);
    const std::size_t cut = 1 + rng.uniform_index(members.size() - 1);
    std::vector<std::size_t> first(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<std::size_t> second(members.begin() + static_cast<std::ptrdiff_t>(cut), members.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    groups[largest] = std::move(first);
    groups.push_back(std::move(second));
  }
  return groups;
}

namespace {

void finish_partition(Partition& p, std::size_t class_count) {
  ClassSet covered(class_count);
  for (const auto& cl : p.clients) {
    for (std::size_t c : cl.identified.members()) {
      covered.insert(c);
      bool has_positive = false;
      for (const auto& y : cl.labels) {
        if (y[c] == LabelState::kPositive) {
          has_positive = true;
          break;
        }
      }
      if (!has_positive) p.identified_without_positive.push_back(c);
    }
  }
  std::sort(p.identified_without_positive.begin(), p.identified_without_positive.end());
  p.identified_without_positive.erase(
      std::unique(p.identified_without_positive.begin(), p.identified_without_positive.end()),
      p.identified_without_positive.end());
  p.unidentified_classes = covered.complement().members();
}

}  // namespace

Partition partition_by_class_groups(const Dataset& data, std::size_t num_clients,
                                    const std::vector<std::vector<std::size_t>>& initial_groups, Rng& rng) {
  data.validate();
  const std::size_t n_classes = data.class_count();
  const auto groups = split_class_groups(initial_groups, num_clients, n_classes, rng);
  std::vector<std::size_t> owner(n_classes);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t c : groups[g]) owner[c] = g;
  }

  std::vector<std::size_t> freq(n_classes, 0);
  for (const auto& y : data.truth) {
    for (std::size_t c = 0; c < n_classes; ++c) freq[c] += y[c];
  }

  std::vector<std::size_t> assign(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::optional<std::size_t> rarest;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (data.truth[i][c] && (!rarest || freq[c] < freq[*rarest])) rarest = c;
    }
    assign[i] = rarest ? owner[*rarest] : rng.uniform_index(num_clients);
  }

  if (data.has_subjects()) {
    std::map<int, std::vector<std::size_t>> votes;
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto& v = votes[data.subjects[i]];
      if (v.empty()) v.assign(num_clients, 0);
      ++v[assign[i]];
    }
    std::map<int, std::size_t> subject_client;
    for (const auto& [subject, v] : votes) {
      subject_client[subject] = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    }
    for (std::size_t i = 0; i < data.size(); ++i) assign[i] = subject_client[data.subjects[i]];
  }

  std::vector<std::vector<std::size_t>> rows(num_clients);
  for (std::size_t i = 0; i < data.size(); ++i) rows[assign[i]].push_back(i);

  Partition p;
  for (std::size_t k = 0; k < num_clients; ++k) {
    p.clients.push_back(make_client_dataset(k, data, rows[k], ClassSet(n_classes, groups[k])));
  }
  finish_partition(p, n_classes);
  return p;
}

namespace {

// Uniform shards, or subjects dealt round-robin when subject ids exist.
std::vector<std::vector<std::size_t>> shard_rows(const Dataset& data, std::size_t num_clients, Rng& rng) {
  std::vector<std::vector<std::size_t>> rows(num_clients);
  if (data.has_subjects()) {
    std::vector<int> subjects = data.subjects;
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    std::map<int, std::size_t> client_of;
    for (std::size_t s = 0; s < subjects.size(); ++s) client_of[subjects[s]] = s % num_clients;
    for (std::size_t i = 0; i < data.size(); ++i) rows[client_of[data.subjects[i]]].push_back(i);
  } else {
    std::vector<std::size_t> perm(data.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    for (std::size_t j = 0; j < perm.size(); ++j) rows[j * num_clients / perm.size()].push_back(perm[j]);
    for (auto& r : rows) std::sort(r.begin(), r.end());
  }
  return rows;
}

}  // namespace

Partition partition_random_identified(const Dataset& data, std::size_t num_clients, std::size_t k, Rng& rng) {
  data.validate();
  const std::size_t n_classes = data.class_count();
  if (num_clients == 0) throw ConfigError("random partition: need at least one client");
  if (k == 0 || k > n_classes) throw ConfigError("random partition: identified count must be in [1, classes]");

  const auto rows = shard_rows(data, num_clients, rng);
  Partition p;
  std::vector<std::size_t> classes(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) classes[c] = c;
  for (std::size_t m = 0; m < num_clients; ++m) {
    rng.shuffle(classes);
    const std::span<const std::size_t> chosen(classes.data(), k);
    p.clients.push_back(make_client_dataset(m, data, rows[m], ClassSet(n_classes, chosen)));
  }
  finish_partition(p, n_classes);
  return p;
}

Partition partition_shards(const Dataset& data, std::size_t num_clients,
                           const std::vector<std::vector<std::size_t>>& identified, Rng& rng) {
  data.validate();
  const std::size_t n_classes = data.class_count();
  if (num_clients == 0) throw ConfigError("shard partition: need at least one client");
  if (identified.size() != num_clients) throw ConfigError("shard partition: need one class set per client");
  for (const auto& set : identified) {
    for (std::size_t c : set) {
      if (c >= n_classes) throw ConfigError("shard partition: class index out of range");
    }
  }
  const auto rows = shard_rows(data, num_clients, rng);
  Partition p;
  for (std::size_t m = 0; m < num_clients; ++m) {
    p.clients.push_back(make_client_dataset(m, data, rows[m], ClassSet(n_classes, identified[m])));
  }
  finish_partition(p, n_classes);
  return p;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  data.validate();
  out << "fedalign-dataset 1\n";
  out << "task " << to_string(data.task) << '\n';
  out << "features " << data.feature_dim() << '\n';
  out << "classes " << data.class_count();
  for (const auto& id : data.labels.ids) out << ' ' << id;
  out << '\n';
  out << "samples " << data.size() << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.has_subjects()) out << data.subjects[i];
    else out << '-';
    out << ' ';
    for (auto b : data.truth[i]) out << static_cast<char>('0' + b);
    for (double v : data.features[i]) out << ' ' << format_real(v);
    out << '\n';
  }
}

namespace {

// Reads the next non-blank line, splitting it; false at EOF.
bool next_tokens(std::istream& in, std::size_t& line_no, std::string& line, std::vector<std::string_view>& tokens) {
  while (std::getline(in, line)) {
    ++line_no;
    tokens = split_ws(line);
    if (!tokens.empty() && tokens[0].front() != '#') return true;
  }
  return false;
}

std::vector<std::string_view> expect_header(std::istream& in, std::size_t& line_no, std::string& line,
                                            std::string_view key) {
  std::vector<std::string_view> tokens;
  if (!next_tokens(in, line_no, line, tokens)) throw ParseError("missing '" + std::string(key) + "' header", line_no + 1);
  if (tokens[0] != key) {
    throw ParseError("expected '" + std::string(key) + "', found '" + std::string(tokens[0]) + "'", line_no);
  }
  return tokens;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto t = expect_header(in, line_no, line, "fedalign-dataset");
  if (t.size() != 2 || t[1] != "1") throw ParseError("unsupported dataset version", line_no);

  Dataset d;
  t = expect_header(in, line_no, line, "task");
  if (t.size() != 2) throw ParseError("malformed task line", line_no);
  try {
    d.task = task_kind_from_string(t[1]);
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), line_no);
  }
  t = expect_header(in, line_no, line, "features");
  if (t.size() != 2) throw ParseError("malformed features line", line_no);
  const std::size_t dim = parse_count(t[1], line_no);

  t = expect_header(in, line_no, line, "classes");
  if (t.size() < 2) throw ParseError("malformed classes line", line_no);
  const std::size_t n_classes = parse_count(t[1], line_no);
  if (t.size() - 2 != n_classes) {
    throw ParseError("classes header declares " + std::to_string(n_classes) + " classes but lists " +
                     std::to_string(t.size() - 2),
                     line_no);
  }
  std::vector<std::string> ids;
  for (std::size_t k = 2; k < t.size(); ++k) ids.emplace_back(t[k]);
  try {
    d.labels = LabelSpace::from_ids(std::move(ids));
    d.labels.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), line_no);
  }

  t = expect_header(in, line_no, line, "samples");
  if (t.size() != 2) throw ParseError("malformed samples line", line_no);
  const std::size_t n = parse_count(t[1], line_no);

  bool any_subject = false;
  bool any_missing = false;
  std::vector<std::string_view> tokens;
  for (std::size_t i = 0; i < n; ++i) {
    if (!next_tokens(in, line_no, line, tokens)) throw ParseError("expected " + std::to_string(n) + " samples", line_no + 1);
    if (tokens.size() != 2 + dim) {
      throw ParseError("expected " + std::to_string(dim) + " features, found " +
                       std::to_string(tokens.size() < 2 ? 0 : tokens.size() - 2),
                       line_no);
    }
    if (tokens[0] == "-") {
      any_missing = true;
      d.subjects.push_back(0);
    } else {
      any_subject = true;
      d.subjects.push_back(static_cast<int>(parse_int(tokens[0], line_no)));
    }
    const auto bits = tokens[1];
    if (bits.size() != n_classes) {
      throw ParseError("label vector has " + std::to_string(bits.size()) + " entries, header declares " +
                       std::to_string(n_classes) + " classes",
                       line_no);
    }
    std::vector<std::uint8_t> y(n_classes);
    std::size_t positives = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (bits[c] != '0' && bits[c] != '1') throw ParseError("label entries must be 0 or 1", line_no);
      y[c] = bits[c] == '1';
      positives += y[c];
    }
    if (d.task == TaskKind::kSingleLabel && positives != 1) {
      throw ParseError("single-label sample must have exactly one positive class", line_no);
    }
    Vector x;
    x.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) x.push_back(parse_real(tokens[2 + k], line_no));
    d.features.push_back(std::move(x));
    d.truth.push_back(std::move(y));
  }
  if (next_tokens(in, line_no, line, tokens)) throw ParseError("trailing content after declared samples", line_no);
  if (any_subject && any_missing) throw ParseError("subject ids must be given for all samples or none", 0);
  if (!any_subject) d.subjects.clear();
  d.validate();
  return d;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write dataset '" + path + "'");
  write_dataset(out, data);
  if (!out) throw ConfigError("failed writing dataset '" + path + "'");
}

void write_partition_manifest(std::ostream& out, const Partition& partition, const LabelSpace& labels) {
  out << "clients " << partition.clients.size() << '\n';
  for (const auto& cl : partition.clients) {
    out << "client " << cl.id << " samples " << cl.size() << " identified";
    for (std::size_t c : cl.identified.members()) out << ' ' << labels.ids[c];
    out << '\n';
  }
  out << "identified_without_positive";
  for (std::size_t c : partition.identified_without_positive) out << ' ' << labels.ids[c];
  out << '\n';
  out << "unidentified";
  for (std::size_t c : partition.unidentified_classes) out << ' ' << labels.ids[c];
  out << '\n';
}

}  // namespace fedalign
