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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fedalign/errors.hpp"
#include "fedalign/label_pretrain.hpp"
#include "oracles.hpp"

namespace fedalign {
namespace {

LabelSpace labels_of(std::initializer_list<std::pair<const char*, const char*>> entries) {
  LabelSpace ls;
  for (const auto& [id, name] : entries) ls.add(id, tokenize(name));
  return ls;
}

TEST(TokenizeTest, LowercasesAndSplits) {
  EXPECT_EQ(tokenize("Cancer, of the COLON!"), (Words{"cancer", "of", "the", "colon"}));
  EXPECT_EQ(tokenize("  "), Words{});
  EXPECT_EQ(tokenize("caf\xc3\xa9 au-lait"), (Words{"caf\xc3\xa9", "au", "lait"}));
}

TEST(LabelSpaceTest, DefaultWindowIsTwiceWordCount) {
  LabelSpace ls;
  ls.add("c1", {"colon", "cancer"});
  ls.add("c2", {"walking"}, 3);
  EXPECT_EQ(ls.windows[0], 4u);
  EXPECT_EQ(ls.windows[1], 3u);
  EXPECT_EQ(ls.index_of("c2"), 1u);
  EXPECT_FALSE(ls.index_of("zz").has_value());
}

TEST(LabelSpaceTest, ValidateRejectsBadEntries) {
  LabelSpace dup;
  dup.ids = {"a", "a"};
  dup.names = {{"x"}, {"y"}};
  dup.windows = {2, 2};
  EXPECT_THROW(dup.validate(), ConfigError);
  LabelSpace short_window;
  short_window.ids = {"a"};
  short_window.names = {{"x", "y"}};
  short_window.windows = {1};
  EXPECT_THROW(short_window.validate(), ConfigError);
}

TEST(LabelSpaceTest, FileRoundTripAndComments) {
  std::istringstream in("# classes\nc1\tcolon cancer\nc2\twalking\t3\n\n");
  const LabelSpace ls = read_label_space(in);
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_EQ(ls.names[0], (Words{"colon", "cancer"}));
  EXPECT_EQ(ls.windows[1], 3u);
  std::ostringstream out;
  write_label_space(out, ls);
  std::istringstream again(out.str());
  const LabelSpace back = read_label_space(again);
  EXPECT_EQ(back.ids, ls.ids);
  EXPECT_EQ(back.names, ls.names);
  EXPECT_EQ(back.windows, ls.windows);
}

TEST(LabelSpaceTest, MalformedLineReportsLine) {
  std::istringstream in("c1\tfoo\nc2\n");
  try {
    read_label_space(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(MatchLabelTest, OrderFreeWithinWindow) {
  const Words seg{"cancer", "of", "the", "colon"};
  const Words name{"colon", "cancer"};
  EXPECT_TRUE(match_label_in_segment(seg, name, 4));
  EXPECT_FALSE(match_label_in_segment(seg, name, 3));
}

TEST(MatchLabelTest, SingleWordAndAbsent) {
  const Words seg{"went", "walking", "today"};
  EXPECT_TRUE(match_label_in_segment(seg, Words{"walking"}, 1));
  EXPECT_FALSE(match_label_in_segment(seg, Words{"running"}, 2));
}

TEST(MatchLabelTest, DuplicateWordsNeedDuplicateCount) {
  const Words name{"new", "new"};
  EXPECT_FALSE(match_label_in_segment(Words{"new", "york"}, name, 4));
  EXPECT_TRUE(match_label_in_segment(Words{"new", "x", "new"}, name, 3));
}

TEST(MatchLabelTest, AgreesWithExhaustiveScan) {
  Rng rng(17);
  const Words vocab{"a", "b", "c", "d"};
  for (int t = 0; t < 500; ++t) {
    Words seg, name;
    for (std::size_t k = 0, n = rng.uniform_index(8); k < n; ++k) seg.push_back(vocab[rng.uniform_index(4)]);
    for (std::size_t k = 0, n = 1 + rng.uniform_index(3); k < n; ++k) name.push_back(vocab[rng.uniform_index(4)]);
    const std::size_t window = name.size() + rng.uniform_index(4);
    EXPECT_EQ(match_label_in_segment(seg, name, window), testing::oracle_match(seg, name, window));
  }
}

TEST(CooccurrenceTest, TwoSegmentExample) {
  const LabelSpace ls = labels_of({{"A", "alpha"}, {"B", "beta"}});
  const std::vector<Words> corpus{tokenize("alpha and beta"), tokenize("alpha alone alpha")};
  const auto counts = count_cooccurrences(corpus, ls);
  EXPECT_DOUBLE_EQ(counts.p(0), 1.0);
  EXPECT_DOUBLE_EQ(counts.p(1), 0.5);
  EXPECT_DOUBLE_EQ(counts.p(0, 1), 0.5);
}

TEST(CooccurrenceTest, NeverTogetherHasZeroJoint) {
  const LabelSpace ls = labels_of({{"A", "alpha"}, {"B", "beta"}});
  const std::vector<Words> corpus{tokenize("alpha"), tokenize("beta")};
  EXPECT_EQ(count_cooccurrences(corpus, ls).joint[0][1], 0u);
}

TEST(CooccurrenceTest, EmptyCorpusIsError) {
  const LabelSpace ls = labels_of({{"A", "alpha"}});
  EXPECT_THROW(count_cooccurrences(std::span<const Words>{}, ls), ConfigError);
  std::istringstream empty("");
  EXPECT_THROW(count_cooccurrences(empty, ls), ConfigError);
}

TEST(CooccurrenceTest, EngineeredFourSegmentCorpus) {
  const LabelSpace ls = labels_of({{"ca", "colon cancer"}, {"wk", "walking"}, {"sl", "sleeping"}});
  std::istringstream corpus(
      "cancer of the colon while walking\n"
      "walking and sleeping walking\n"
      "the colon is fine\n"
      "sleeping after colon cancer\n");
  const auto counts = count_cooccurrences(corpus, ls);
  EXPECT_EQ(counts.segment_count, 4u);
  EXPECT_EQ(counts.occurrences, (std::vector<std::size_t>{2, 2, 2}));
  EXPECT_EQ(counts.joint[0][1], 1u);
  EXPECT_EQ(counts.joint[1][2], 1u);
  EXPECT_EQ(counts.joint[0][2], 1u);
}

TEST(CooccurrenceTest, MatchesBruteForceOnRandomCorpora) {
  Rng rng(23);
  const LabelSpace ls = labels_of({{"a", "red apple"}, {"b", "pear"}, {"c", "green"}, {"d", "apple pie"}});
  const Words vocab{"red", "apple", "pear", "green", "pie", "the", "x"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Words> corpus;
    const std::size_t segs = 1 + rng.uniform_index(200);
    for (std::size_t s = 0; s < segs; ++s) {
      Words seg;
      for (std::size_t k = 0, n = 1 + rng.uniform_index(10); k < n; ++k) seg.push_back(vocab[rng.uniform_index(7)]);
      corpus.push_back(std::move(seg));
    }
    const auto got = count_cooccurrences(corpus, ls);
    const auto want = testing::oracle_counts(corpus, ls);
    EXPECT_EQ(got.occurrences, want.occ);
    EXPECT_EQ(got.joint, want.joint);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) EXPECT_LE(got.joint[i][j], std::min(got.occurrences[i], got.occurrences[j]));
    }
  }
}

CooccurrenceCounts counts_from(std::size_t segments, std::vector<std::size_t> occ,
                               std::vector<std::vector<std::size_t>> joint) {
  CooccurrenceCounts c;
  c.segment_count = segments;
  c.occurrences = std::move(occ);
  c.joint = std::move(joint);
  return c;
}

TEST(PmiTest, IndependentAndPerfect) {
  const auto indep = pmi(counts_from(4, {2, 2}, {{2, 1}, {1, 2}}));
  EXPECT_NEAR(*indep.at(0, 1), 0.0, 1e-15);
  const auto perfect = pmi(counts_from(4, {2, 2}, {{2, 2}, {2, 2}}));
  EXPECT_NEAR(*perfect.at(0, 1), std::log(2.0), 1e-15);
  EXPECT_FALSE(perfect.at(0, 0).has_value());
}

TEST(PmiTest, EngineeredThreeLabelsMatchFormula) {
  const auto c = counts_from(10, {5, 4, 2}, {{5, 3, 1}, {3, 4, 0}, {1, 0, 2}});
  const auto m = pmi(c);
  EXPECT_DOUBLE_EQ(*m.at(0, 1), std::log(0.3 / (0.5 * 0.4)));
  EXPECT_DOUBLE_EQ(*m.at(0, 2), std::log(0.1 / (0.5 * 0.2)));
  EXPECT_FALSE(m.at(1, 2).has_value());
  EXPECT_EQ(*m.at(1, 0), *m.at(0, 1));
  EXPECT_EQ(m.present_count(), 2u);
}

PmiMatrix pmi_of(std::size_t n, std::initializer_list<std::tuple<std::size_t, std::size_t, double>> entries) {
  PmiMatrix m(n);
  for (const auto& [i, j, v] : entries) m.set(i, j, v);
  return m;
}

TEST(GraphTest, CenteringDropsNonPositive) {
  const auto g = build_cooccurrence_graph(pmi_of(3, {{0, 1, 1.0}, {0, 2, 2.0}, {1, 2, 3.0}}));
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_DOUBLE_EQ(*g.weight(1, 2), 1.0);
  EXPECT_DOUBLE_EQ(*g.weight(2, 1), 1.0);
  EXPECT_FALSE(g.weight(0, 1).has_value());
}

TEST(GraphTest, SingleOrEqualValuesCenterToNothing) {
  EXPECT_EQ(build_cooccurrence_graph(pmi_of(2, {{0, 1, 0.7}})).edge_count(), 0u);
  EXPECT_EQ(build_cooccurrence_graph(pmi_of(3, {{0, 1, 0.7}, {1, 2, 0.7}})).edge_count(), 0u);
}

TEST(GraphTest, NoPresentEntryIsError) {
  EXPECT_THROW(build_cooccurrence_graph(PmiMatrix(3)), ConfigError);
}

TEST(GraphTest, RejectsSelfLoopAndNonPositive) {
  CooccurrenceGraph g(3);
  EXPECT_THROW(g.add_edge(1, 1, 1.0), ConfigError);
  EXPECT_THROW(g.add_edge(0, 1, 0.0), ConfigError);
}

TEST(WalkTest, TwoNodesAlternate) {
  CooccurrenceGraph g(2);
  g.add_edge(0, 1, 0.5);
  Rng rng(1);
  for (const auto& w : simulate_walks(g, 4, 3, rng)) {
    ASSERT_EQ(w.size(), 4u);
    for (std::size_t k = 1; k < w.size(); ++k) EXPECT_NE(w[k], w[k - 1]);
  }
}

TEST(WalkTest, IsolatedNodeStops) {
  CooccurrenceGraph g(3);
  g.add_edge(0, 1, 1.0);
  Rng rng(1);
  const auto walks = simulate_walks(g, 5, 2, rng);
  ASSERT_EQ(walks.size(), 6u);
  EXPECT_EQ(walks[4], Walk{2});
  EXPECT_EQ(walks[5], Walk{2});
}

TEST(WalkTest, TransitionFrequenciesFollowWeights) {
  CooccurrenceGraph g(3);
  g.add_edge(0, 1, 1.0);
  g.add_edge(0, 2, 3.0);
  Rng rng(2024);
  const auto walks = simulate_walks(g, 2, 10000, rng);
  double to1 = 0, total = 0;
  for (const auto& w : walks) {
    if (w[0] != 0) continue;
    total += 1;
    to1 += w[1] == 1 ? 1 : 0;
  }
  EXPECT_NEAR(to1 / total, 0.25, 0.02);
  EXPECT_NEAR(1.0 - to1 / total, 0.75, 0.02);
}

TEST(WalkTest, ZeroLengthRejected) {
  CooccurrenceGraph g(1);
  Rng rng(1);
  EXPECT_THROW(simulate_walks(g, 0, 1, rng), ConfigError);
}

TEST(SgnsTest, GradientMatchesFiniteDifferences) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 5;
    const Vector ctr = testing::random_vector(d, rng), ctx = testing::random_vector(d, rng);
    std::vector<Vector> negs{testing::random_vector(d, rng), testing::random_vector(d, rng)};
    const auto g = sgns_pair_loss(ctr, ctx, negs);
    Vector all;
    for (const Vector* v : std::initializer_list<const Vector*>{&ctr, &ctx, &negs[0], &negs[1]}) all.insert(all.end(), v->begin(), v->end());
    auto fn = [&](std::span<const double> p) {
      std::vector<Vector> n2{Vector(p.begin() + 10, p.begin() + 15), Vector(p.begin() + 15, p.begin() + 20)};
      return sgns_pair_loss(p.subspan(0, 5), p.subspan(5, 5), n2).loss;
    };
    const Vector fd = finite_diff_grad(fn, all, 1e-5);
    Vector analytic = g.center;
    for (const Vector* v : std::initializer_list<const Vector*>{&g.context, &g.negatives[0], &g.negatives[1]}) analytic.insert(analytic.end(), v->begin(), v->end());
    EXPECT_LT(max_relative_error(analytic, fd, 1e-6), 1e-4);
  }
}

TEST(EmbeddingTest, CoWalkedNodesEndUpCloser) {
  // A and B alternate in every walk; C never appears.
  std::vector<Walk> walks;
  for (int i = 0; i < 50; ++i) walks.push_back({0, 1, 0, 1, 0, 1});
  EmbeddingTrainingConfig cfg;
  cfg.dim = 16;
  cfg.negatives = 1;
  Rng rng(4);
  const Matrix e = train_name_embeddings(walks, 3, cfg, rng);
  EXPECT_EQ(e.rows(), 3u);
  EXPECT_EQ(e.cols(), 16u);
  EXPECT_GT(cosine_similarity(e.row(0), e.row(1)), cosine_similarity(e.row(0), e.row(2)));
  Rng again(4);
  EXPECT_EQ(train_name_embeddings(walks, 3, cfg, again), e);
}

TEST(EmbeddingTest, ZeroDimensionRejected) {
  EmbeddingTrainingConfig cfg;
  cfg.dim = 0;
  Rng rng(1);
  EXPECT_THROW(train_name_embeddings({}, 2, cfg, rng), ConfigError);
}

TEST(EmbeddingTest, FileRoundTrip) {
  const LabelSpace ls = LabelSpace::from_ids({"x", "y"});
  Rng rng(8);
  const Matrix e = testing::random_matrix(2, 3, rng);
  std::ostringstream out;
  write_embeddings(out, ls, e);
  std::istringstream in(out.str());
  EXPECT_EQ(read_embeddings(in, ls), e);
}

TEST(LabelTableTest, ShapeDeterminismAndEqualRows) {
  Rng rng(6);
  Matrix emb = testing::random_matrix(3, 8, rng);
  for (std::size_t k = 0; k < 8; ++k) emb(2, k) = emb(0, k);
  Rng r1(9), r2(9);
  const Matrix t = init_label_table(emb, 256, r1);
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.cols(), 256u);
  EXPECT_EQ(t, init_label_table(emb, 256, r2));
  for (std::size_t k = 0; k < 256; ++k) EXPECT_EQ(t(0, k), t(2, k));
  EXPECT_THROW(init_label_table(emb, 0, r1), ConfigError);
}

TEST(PretrainTest, NoEdgesFallsBackToRandom) {
  const auto counts = counts_from(4, {2, 2}, {{2, 2}, {2, 2}});
  PretrainConfig cfg;
  cfg.embedding.dim = 4;
  Rng rng(1);
  const auto r = pretrain_label_embeddings(counts, cfg, rng);
  EXPECT_TRUE(r.fell_back_to_random);
  EXPECT_EQ(r.embeddings.rows(), 2u);
  EXPECT_TRUE(r.embeddings.all_finite());
}

TEST(PretrainTest, TwoClusterSeparation) {
  LabelSpace ls;
  for (const char* n : {"apple", "pear", "plum", "hammer", "wrench", "saw"}) ls.add(n, {n});
  const std::vector<std::vector<std::size_t>> clusters{{0, 1, 2}, {3, 4, 5}};
  Rng rng(12);
  CooccurrenceCounter counter(ls);
  for (const auto& seg : synthetic_corpus(ls, clusters, 200, rng)) counter.add_text(seg);
  const auto r = pretrain_label_embeddings(counter.finish(), PretrainConfig{}, rng);
  const auto [intra, inter] = testing::cluster_cosines(r.embeddings, clusters);
  EXPECT_GT(intra, inter);
  for (std::size_t u = 0; u < r.graph.node_count(); ++u) {
    double total = 0.0;
    for (const auto& e : r.graph.neighbors(u)) {
      EXPECT_GT(e.weight, 0.0);
      total += e.weight;
    }
    if (!r.graph.neighbors(u).empty()) {
      double prob = 0.0;
      for (const auto& e : r.graph.neighbors(u)) prob += e.weight / total;
      EXPECT_NEAR(prob, 1.0, 1e-12);
    }
  }
}

}  // namespace
}  // namespace fedalign
