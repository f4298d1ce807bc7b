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
#include <sstream>

#include <gtest/gtest.h>

#include "fedalign/errors.hpp"
#include "fedalign/experiment.hpp"
#include "fedalign/metrics.hpp"
#include "oracles.hpp"

namespace fedalign {
namespace {

namespace fs = std::filesystem;
using Rows = std::vector<std::vector<std::uint8_t>>;

Rows one_hot(std::initializer_list<std::size_t> classes, std::size_t n) {
  Rows out;
  for (std::size_t c : classes) {
    std::vector<std::uint8_t> y(n, 0);
    y[c] = 1;
    out.push_back(y);
  }
  return out;
}

TEST(MetricsTest, PerfectPredictions) {
  const Rows t = one_hot({0, 1, 2, 1}, 3);
  const auto r = compute_metrics(t, t);
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.macro_accuracy, 1.0);
}

TEST(MetricsTest, AllNegativeClassHasZeroF1) {
  const Rows truth{{1, 0}, {1, 1}};
  const Rows pred{{0, 0}, {0, 1}};
  const auto r = compute_metrics(pred, truth);
  EXPECT_EQ(r.per_class[0].f1, 0.0);
  EXPECT_EQ(r.per_class[0].precision, 0.0);
  EXPECT_EQ(r.per_class[1].f1, 1.0);
}

TEST(MetricsTest, ThreeClassHandCase) {
  // truth:   0 0 1 1 2 2
  // predict: 0 1 1 1 2 0
  // class 0: tp1 fp1 fn1 tn3 -> f1 1/2, acc 4/6
  // class 1: tp2 fp1 fn0 tn3 -> f1 4/5, acc 5/6
  // class 2: tp1 fp0 fn1 tn4 -> f1 2/3, acc 5/6
  const auto r = compute_metrics(one_hot({0, 1, 1, 1, 2, 0}, 3), one_hot({0, 0, 1, 1, 2, 2}, 3));
  EXPECT_NEAR(r.per_class[0].f1, 0.5, 1e-15);
  EXPECT_NEAR(r.per_class[1].f1, 0.8, 1e-15);
  EXPECT_NEAR(r.per_class[2].f1, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.macro_f1, (0.5 + 0.8 + 2.0 / 3.0) / 3.0, 1e-15);
  EXPECT_NEAR(r.macro_accuracy, (4.0 + 5.0 + 5.0) / 18.0, 1e-15);
  EXPECT_NEAR(r.per_class[1].precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.per_class[2].recall, 0.5, 1e-15);
}

TEST(MetricsTest, MatchesOracleAndIsReorderInvariant) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 1 + rng.uniform_index(10), n = 1 + rng.uniform_index(200);
    Rows pred(n, std::vector<std::uint8_t>(classes)), truth = pred;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < classes; ++c) {
        pred[i][c] = rng.uniform() < 0.4;
        truth[i][c] = rng.uniform() < 0.4;
      }
    }
    const auto r = compute_metrics(pred, truth);
    const auto o = testing::oracle_metrics(pred, truth);
    EXPECT_NEAR(r.macro_f1, o.macro_f1, 1e-12);
    EXPECT_NEAR(r.macro_accuracy, o.macro_acc, 1e-12);
    for (std::size_t c = 0; c < classes; ++c) {
      EXPECT_NEAR(r.per_class[c].f1, o.f1[c], 1e-12);
      EXPECT_GE(r.per_class[c].precision, 0.0);
      EXPECT_LE(r.per_class[c].recall, 1.0);
    }
    std::vector<std::size_t> perm(classes);
    for (std::size_t c = 0; c < classes; ++c) perm[c] = c;
    rng.shuffle(perm);
    Rows pp = pred, tt = truth;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < classes; ++c) {
        pp[i][c] = pred[i][perm[c]];
        tt[i][c] = truth[i][perm[c]];
      }
    }
    EXPECT_NEAR(compute_metrics(pp, tt).macro_f1, r.macro_f1, 1e-12);
  }
}

TEST(MetricsTest, EmptyTestSetRejected) {
  EXPECT_THROW(compute_metrics({}, {}), ConfigError);
  Rng rng(1);
  const GlobalModel m = testing::random_model(2, 3, 2, 2, TaskKind::kSingleLabel, rng);
  EXPECT_THROW(evaluate(m, Dataset{}), ConfigError);
}

RoundHistory sample_history(std::size_t rounds) {
  RoundHistory h;
  for (std::size_t t = 1; t <= rounds; ++t) {
    RoundRecord r;
    r.round = t;
    r.train_loss = 1.0 / static_cast<double>(t);
    if (t % 2 == 0) {
      r.macro_f1 = 0.5 + 0.001 * static_cast<double>(t);
      r.macro_accuracy = 0.75;
    }
    h.push_back(r);
  }
  return h;
}

TEST(HistoryTest, HeaderRowsAndFormat) {
  std::ostringstream out;
  write_history(out, sample_history(3));
  EXPECT_EQ(out.str(),
            "round,train_loss,macro_f1,macro_acc\n"
            "1,1.000000,,\n"
            "2,0.500000,0.502000,0.750000\n"
            "3,0.333333,,\n");
  std::ostringstream empty;
  EXPECT_THROW(write_history(empty, {}), ProtocolError);
}

TEST(HistoryTest, ReserializationIsByteIdentical) {
  std::ostringstream first;
  write_history(first, sample_history(50));
  std::istringstream in(first.str());
  const RoundHistory back = read_history(in);
  EXPECT_EQ(back.size(), 50u);
  std::ostringstream second;
  write_history(second, back);
  EXPECT_EQ(second.str(), first.str());
  std::istringstream bad("round,loss\n");
  EXPECT_THROW(read_history(bad), ParseError);
}

TEST(CheckpointTest, RoundTripIsExact) {
  Rng rng(3);
  GlobalModel m = testing::random_model(3, 5, 4, 6, TaskKind::kMultiLabel, rng);
  m.label_table(0, 0) = 0.1;
  m.label_table(1, 1) = -1e-310;
  std::ostringstream out;
  write_checkpoint(out, m, 12);
  std::istringstream in(out.str());
  const Checkpoint cp = read_checkpoint(in);
  EXPECT_EQ(cp.round, 12u);
  EXPECT_EQ(cp.model, m);
  std::ostringstream again;
  write_checkpoint(again, cp.model, 12);
  EXPECT_EQ(again.str(), out.str());

  std::string text = out.str();
  text.replace(text.find("label_table 6 4"), 15, "label_table 6 5");
  std::istringstream broken(text);
  EXPECT_THROW(read_checkpoint(broken), ParseError);
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_config(in);
}

const char* kSmallConfig = R"([experiment]
seed = 3
method = fedalign

[data]
classes = 4
samples_per_class = 20
feature_dim = 4

[partition]
kind = class_groups
clients = 2
groups = 0 1 | 2 3

[federation]
rounds = 50
clients_per_round = 2

[client]
epochs = 1

[model]
dim = 4
hidden = 6
activation = tanh

[pretrain]
corpus_segments = 60
corpus_clusters = 0 1 | 2 3
embedding_dim = 8
epochs = 1
)";

TEST(ConfigTest, ParsesSectionsAndDefaults) {
  const auto cfg = parse(kSmallConfig);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.federation.client.method, Method::kFedAlign);
  EXPECT_EQ(cfg.data.synthetic.classes, 4u);
  EXPECT_EQ(cfg.partition.groups, (std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}}));
  EXPECT_EQ(cfg.federation.rounds, 50u);
  EXPECT_EQ(cfg.federation.client.q1, 95.0);
  EXPECT_EQ(cfg.model.activation, Activation::kTanh);
  EXPECT_TRUE(cfg.pretrain.enabled);
}

TEST(ConfigTest, Rejections) {
  EXPECT_THROW(parse("[experiment]\nmethod = fedavg\n"), ConfigError);  // no seed
  EXPECT_THROW(parse("[experiment]\nseed = 1\nsede = 2\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nseed = 1\n[optimizer]\nlr = 1\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nseed = x\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nseed = 1\nmethod = scaffold\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nseed = 1\n[client]\nlr = fast\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nseed = 1\n[client]\nno_semantic = maybe\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nseed = 1\n[data]\nsource = file\ntrain = /nonexistent\ntest = /nonexistent\n"),
               ConfigError);
  EXPECT_THROW(parse("[experiment]\nseed = 1\n[partition]\nkind = shards\nclients = 2\ngroups = 0\n"), ConfigError);
}

TEST(ConfigTest, MethodConfigsDifferInOneField) {
  std::string fedavg = kSmallConfig;
  fedavg.replace(fedavg.find("method = fedalign"), 17, "method = fedavg");
  const auto a = parse(kSmallConfig), b = parse(fedavg);
  EXPECT_EQ(b.federation.client.method, Method::kFedAvg);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.federation.rounds, b.federation.rounds);
  EXPECT_EQ(a.federation.client.epochs, b.federation.client.epochs);
  EXPECT_EQ(a.partition.groups, b.partition.groups);
}

class ExperimentRunTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fedalign_eval_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(ExperimentRunTest, FiftyRoundHistoryAndOutputs) {
  ExperimentConfig cfg = parse(kSmallConfig);
  cfg.output_dir = dir_;
  cfg.checkpoint_every = 25;
  const auto res = run_experiment(cfg);
  EXPECT_FALSE(res.run.failure);
  std::istringstream hist(slurp(dir_ / "history.csv"));
  std::string header;
  std::getline(hist, header);
  EXPECT_EQ(header, "round,train_loss,macro_f1,macro_acc");
  std::size_t rows = 0;
  for (std::string line; std::getline(hist, line);) ++rows;
  EXPECT_EQ(rows, 50u);
  for (const char* f : {"summary.txt", "partition.txt", "run_report.txt", "checkpoint_final.txt",
                        "checkpoint_round_0025.txt", "checkpoint_round_0050.txt", "label_embeddings.txt"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  const Checkpoint cp = load_checkpoint(dir_ / "checkpoint_final.txt");
  EXPECT_EQ(cp.round, 50u);
  EXPECT_EQ(cp.model, res.run.model);
  EXPECT_NEAR(evaluate(cp.model, prepare_data(cfg).test).macro_f1, res.final_metrics.macro_f1, 1e-15);
}

TEST_F(ExperimentRunTest, RepeatedRunsAreByteIdentical) {
  ExperimentConfig cfg = parse(kSmallConfig);
  cfg.federation.rounds = 5;
  cfg.output_dir = dir_ / "a";
  run_experiment(cfg);
  cfg.output_dir = dir_ / "b";
  run_experiment(cfg);
  for (const char* f : {"history.csv", "checkpoint_final.txt", "summary.txt", "partition.txt"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
}

}  // namespace
}  // namespace fedalign
