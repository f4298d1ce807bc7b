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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedalign/errors.hpp"
#include "fedalign/experiment.hpp"

namespace fs = std::filesystem;
using namespace fedalign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const CommonFlags& flags) {
  ExperimentConfig cfg = load_experiment_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  return cfg;
}

void write_text(const fs::path& path, const auto& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  fn(out);
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

int cmd_gen_data(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const ExperimentData data = prepare_data(cfg);
  fs::create_directories(cfg.output_dir);
  save_dataset((cfg.output_dir / "train.txt").string(), data.train);
  save_dataset((cfg.output_dir / "test.txt").string(), data.test);
  write_text(cfg.output_dir / "labels.txt", [&](std::ostream& o) { write_label_space(o, data.train.labels); });
  std::cout << "wrote " << data.train.size() << " train / " << data.test.size() << " test samples to "
            << cfg.output_dir.string() << '\n';
  return kExitOk;
}

int cmd_pretrain(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const ExperimentData data = prepare_data(cfg);
  const PretrainResult r = pretrain_labels(cfg, data.train.labels);
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "label_embeddings.txt",
             [&](std::ostream& o) { write_embeddings(o, data.train.labels, r.embeddings); });
  std::cout << "graph: " << r.graph.node_count() << " nodes, " << r.graph.edge_count() << " edges\n";
  if (r.fell_back_to_random) std::cerr << "warning: no positive-PMI edges; embeddings are random\n";
  return kExitOk;
}

int cmd_run(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const ExperimentResult r = run_experiment(cfg);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  if (r.run.failure) {
    std::cerr << "error: " << *r.run.failure << '\n';
    return kExitDivergence;
  }
  std::cout << "macro_f1 " << r.final_metrics.macro_f1 << " macro_acc " << r.final_metrics.macro_accuracy << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_path) {
  const Checkpoint cp = load_checkpoint(checkpoint);
  const Dataset test = load_dataset(data_path);
  const MetricsReport m = evaluate(cp.model, test);
  std::cout << "round " << cp.round << '\n';
  write_metrics_report(std::cout, m, test.labels);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedalign: federated learning with client-exclusive classes"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "override the config seed");
    sub->add_option("--out", flags.out, "override the output directory");
  };
  auto* gen = app.add_subcommand("gen-data", "write the configured synthetic train/test sets");
  add_common(gen);
  auto* pre = app.add_subcommand("pretrain-labels", "pretrain label-name embeddings");
  add_common(pre);
  auto* run = app.add_subcommand("run", "run a federated experiment");
  add_common(run);
  std::string checkpoint, data_path;
  auto* eval = app.add_subcommand("evaluate", "score a checkpoint on a dataset file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_data(flags);
    if (*pre) return cmd_pretrain(flags);
    if (*run) return cmd_run(flags);
    return cmd_evaluate(checkpoint, data_path);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataIntegrityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitFailure;
  }
}
