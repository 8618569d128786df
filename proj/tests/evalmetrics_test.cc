// Copyright 2026 The relax Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "relax/evalmetrics.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "relax/synthdata.h"

namespace relax {
namespace {

Grid random_grid(Rng& rng, int h, int w) {
  Grid g(h, w);
  for (double& v : g.values()) v = rng.uniform();
  return g;
}

GroundTruth random_gt(Rng& rng, int h, int w) {
  Grid g(h, w);
  for (double& v : g.values()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
  g[static_cast<std::size_t>(rng.uniform_int(0, h * w - 1))] = 1.0;
  return GroundTruth(g);
}

// Pixel i is in the top k when fewer than k pixels precede it, where j
// precedes i if v[j] > v[i], or v[j] == v[i] and j < i.
double brute_topk(const Grid& v, const GroundTruth& gt, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t before = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] > v[i] || (v[j] == v[i] && j < i)) ++before;
    }
    if (before < k && gt.contains(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

TEST(GroundTruthTest, Validation) {
  EXPECT_THROW(GroundTruth(Grid(2, 2, 0.0)), InvalidArgument);
  EXPECT_THROW(GroundTruth(Grid(1, 2, {0.5, 1.0})), InvalidArgument);
  const GroundTruth gt(Grid(1, 3, {1.0, 0.0, 1.0}));
  EXPECT_EQ(gt.positives(), 2u);
  EXPECT_TRUE(gt.contains(2));
  EXPECT_FALSE(gt.contains(1));
}

TEST(PointingGameTest, Examples) {
  const Grid g(2, 3, {0, 1, 1, 0, 0, 1});
  const GroundTruth gt(g);
  EXPECT_EQ(pointing_game(g, gt), 1);
  Grid inv(2, 3);
  for (std::size_t i = 0; i < 6; ++i) inv[i] = 1.0 - g[i];
  EXPECT_EQ(pointing_game(inv, gt), 0);
  const GroundTruth corner(Grid(2, 2, {1, 0, 0, 0}));
  EXPECT_EQ(pointing_game(Grid(2, 2, 0.3), corner), 1);
  EXPECT_THROW(pointing_game(Grid(3, 2), gt), InvalidArgument);
}

TEST(TopkTest, Examples) {
  const GroundTruth gt(Grid(2, 2, {1, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(topk_intersection(Grid(2, 2, {0.9, 0.8, 0.1, 0.2}), gt, 2), 0.5);
  const Grid g(2, 4, {1, 0, 0, 1, 0, 0, 1, 0});
  const GroundTruth gt2(g);
  EXPECT_DOUBLE_EQ(topk_intersection(g, gt2, 3), 1.0);
  Grid inv(2, 4);
  for (std::size_t i = 0; i < 8; ++i) inv[i] = 1.0 - g[i];
  EXPECT_DOUBLE_EQ(topk_intersection(inv, gt2, 3), 0.0);
  EXPECT_DOUBLE_EQ(relevance_rank(g, gt2), 1.0);
  EXPECT_DOUBLE_EQ(relevance_rank(inv, gt2), 0.0);
  EXPECT_THROW(topk_intersection(g, gt2, 0), InvalidArgument);
  EXPECT_THROW(topk_intersection(g, gt2, 9), InvalidArgument);
}

TEST(TopkTest, MatchesBruteForceWithTies) {
  Rng rng({21, 0});
  for (int trial = 0; trial < 200; ++trial) {
    Grid v = random_grid(rng, 8, 8);
    // Quantise so that ties are common.
    for (double& x : v.values()) x = std::floor(x * 6.0);
    const GroundTruth gt = random_gt(rng, 8, 8);
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 64));
    ASSERT_EQ(topk_intersection(v, gt, k), brute_topk(v, gt, k));
    ASSERT_EQ(relevance_rank(v, gt), topk_intersection(v, gt, gt.positives()));
  }
}

TEST(TopkTest, InvariantUnderMonotoneTransforms) {
  Rng rng({22, 0});
  for (int trial = 0; trial < 200; ++trial) {
    const Grid v = random_grid(rng, 8, 8);
    const GroundTruth gt = random_gt(rng, 8, 8);
    Grid cube = v;
    Grid affine = v;
    for (double& x : cube.values()) x = x * x * x;
    for (double& x : affine.values()) x = 2.0 * x + 1.0;
    for (const Grid* t : {&cube, &affine}) {
      ASSERT_EQ(pointing_game(*t, gt), pointing_game(v, gt));
      ASSERT_EQ(relevance_rank(*t, gt), relevance_rank(v, gt));
      ASSERT_EQ(topk_intersection(*t, gt, 10), topk_intersection(v, gt, 10));
    }
  }
}

TEST(RelevanceRankTest, RandomMapOnHalfAreaAveragesOneHalf) {
  Grid half(8, 8, 0.0);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) half(y, x) = 1.0;
  }
  const GroundTruth gt(half);
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng({seed, 1});
    sum += relevance_rank(random_grid(rng, 8, 8), gt);
  }
  EXPECT_NEAR(sum / 1000.0, 0.5, 0.03);
}

TEST(SpearmanTest, AverageRanksAndDegenerate) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {5, 6, 7, 8, 7};
  EXPECT_NEAR(spearman_correlation(a, b).value, 8.0 / std::sqrt(95.0), 1e-12);
  const std::vector<double> rev = {5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman_correlation(a, rev).value, -1.0, 1e-12);
  const Correlation flat = spearman_correlation(a, std::vector<double>(5, 2.0));
  EXPECT_TRUE(flat.degenerate);
  EXPECT_EQ(flat.value, 0.0);
  EXPECT_THROW(spearman_correlation(a, std::vector<double>{1.0}), InvalidArgument);
}

TEST(ProbeModelTest, TrainAndPredict) {
  const std::vector<Embedding> x = {Embedding({0, 0}), Embedding({0, 2}),
                                    Embedding({4, 0}), Embedding({4, 2})};
  const std::vector<int> y = {0, 0, 1, 1};
  const ProbeModel probe = ProbeModel::train(x, y);
  ASSERT_EQ(probe.classes(), 2u);
  EXPECT_EQ(probe.centroids()[0], Embedding({0, 1}));
  EXPECT_EQ(probe.centroids()[1], Embedding({4, 1}));
  EXPECT_EQ(probe.predict(Embedding({1, 1})), 0);
  const auto p = probe.probabilities(Embedding({2, 1}));
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  const std::vector<int> one_class = {0, 0, 0, 0};
  EXPECT_THROW(ProbeModel::train(x, one_class), InvalidArgument);
}

// 8x8 image with distinct intensities, identity features, and a probe whose
// classes are the intact image and the black image. Zeroing a set S moves
// the embedding towards the black class by sum_S x^2, so bins of brighter
// pixels cause larger drops.
struct MonotoneFixture {
  Image image{8, 8, 1};
  Grid importance{8, 8};
  DownsampleFlatten identity{8, 8};
  std::optional<ProbeModel> probe;

  MonotoneFixture() {
    for (std::size_t i = 0; i < 64; ++i) {
      const float v = static_cast<float>(0.2 + 0.8 * static_cast<double>((i * 37) % 64) / 63.0);
      image.mutable_data()[i] = v;
      importance[i] = v;
    }
    double norm2 = 0.0;
    for (float v : image.data()) norm2 += static_cast<double>(v) * v;
    probe.emplace(std::vector<Embedding>{identity.extract(image),
                                         identity.extract(Image(8, 8, 1))},
                  norm2 / 4.0);
  }
};

TEST(MonotonicityTest, ConstructedFixtureIsPositive) {
  MonotoneFixture f;
  const MonotonicityResult r = monotonicity(f.importance, f.image, f.identity, *f.probe, 8);
  EXPECT_FALSE(r.correlation.degenerate);
  EXPECT_NEAR(r.correlation.value, 1.0, 1e-12);
  for (std::size_t b = 1; b < 8; ++b) {
    EXPECT_LT(r.bin_importance[b], r.bin_importance[b - 1]);
    EXPECT_LT(r.probability_drop[b], r.probability_drop[b - 1]);
  }
}

TEST(MonotonicityTest, RankReversalFlipsSign) {
  MonotoneFixture f;
  const double a = monotonicity(f.importance, f.image, f.identity, *f.probe, 8).correlation.value;
  Grid reversed(8, 8);
  for (std::size_t i = 0; i < 64; ++i) reversed[i] = 1.2 - f.importance[i];
  const double b = monotonicity(reversed, f.image, f.identity, *f.probe, 8).correlation.value;
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(b, -a, 1e-12);
}

TEST(MonotonicityTest, NegationKeepsMagnitudeRanking) {
  MonotoneFixture f;
  Grid negated(8, 8);
  for (std::size_t i = 0; i < 64; ++i) negated[i] = -f.importance[i];
  const auto a = monotonicity(f.importance, f.image, f.identity, *f.probe, 8);
  const auto b = monotonicity(negated, f.image, f.identity, *f.probe, 8);
  EXPECT_EQ(a.correlation.value, b.correlation.value);
}

TEST(MonotonicityTest, ConstantImportanceIsDegenerate) {
  MonotoneFixture f;
  const auto r = monotonicity(Grid(8, 8, 0.4), f.image, f.identity, *f.probe, 8);
  EXPECT_TRUE(r.correlation.degenerate);
  EXPECT_EQ(r.correlation.value, 0.0);
  EXPECT_THROW(monotonicity(f.importance, f.image, f.identity, *f.probe, 2),
               InvalidArgument);
}

TEST(NamesTest, ParseAndDisplay) {
  EXPECT_EQ(parse_eval_method("urelax"), EvalMethod::kUrelax);
  EXPECT_EQ(display_name(EvalMethod::kUrelax), "U-RELAX");
  EXPECT_EQ(parse_eval_metric("rank"), EvalMetric::kRank);
  EXPECT_EQ(display_name(EvalMetric::kTopk), "topk_intersection");
  EXPECT_THROW(parse_eval_method("gradcam"), InvalidArgument);
  EXPECT_THROW(parse_eval_metric("iou"), InvalidArgument);
}

std::vector<LabeledImage> small_corpus(int n) {
  SceneSpec spec;
  spec.height = spec.width = 32;
  spec.min_size = 8;
  spec.max_size = 16;
  spec.rng = {3, 0};
  std::vector<LabeledImage> out;
  for (int i = 0; i < n; ++i) {
    spec.shape = i % 2 == 0 ? Shape::kRectangle : Shape::kEllipse;
    Scene s = generate_scene(spec, static_cast<std::uint64_t>(i));
    out.push_back({std::move(s.image), GroundTruth(s.gt), s.label});
  }
  return out;
}

TEST(EvaluateCorpusTest, TableShapeAndDeterminism) {
  const auto corpus = small_corpus(4);
  EvalConfig config;
  config.n_masks = 40;
  config.repeats = 2;
  config.strategy.grid_h = config.strategy.grid_w = 4;
  const HogExtractor hog;
  const ScoreTable a = evaluate_corpus(corpus, hog, config);
  const ScoreTable b = evaluate_corpus(corpus, hog, config);
  ASSERT_EQ(a.rows.size(), 6u);
  const std::string text = format_score_table(a);
  EXPECT_EQ(text, format_score_table(b));
  EXPECT_EQ(text.substr(0, text.find('\n')), "method,metric,mean,std,n");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
  for (const auto& row : a.rows) {
    EXPECT_EQ(row.n, 2);
    EXPECT_EQ(row.per_repeat.size(), 2u);
    EXPECT_GE(row.mean, 0.0);
    EXPECT_LE(row.mean, 1.0);
  }
  EXPECT_NO_THROW(a.find(EvalMethod::kRandom, EvalMetric::kRank));
  EXPECT_THROW(a.find(EvalMethod::kSaliency, EvalMetric::kRank), InvalidArgument);
}

TEST(EvaluateCorpusTest, AllMethodsAndMonotonicity) {
  const auto corpus = small_corpus(4);
  EvalConfig config;
  config.methods = {EvalMethod::kRelax, EvalMethod::kUrelax, EvalMethod::kSaliency,
                    EvalMethod::kSmoothGrad, EvalMethod::kRandom};
  config.metrics = {EvalMetric::kPointing, EvalMetric::kMonotonicity};
  config.n_masks = 20;
  config.repeats = 1;
  config.strategy.grid_h = config.strategy.grid_w = 4;
  config.saliency.smoothgrad = SmoothGradParams{2, 0.05, {}};
  const ScoreTable t = evaluate_corpus(corpus, LinearProjection(8, 1), config);
  ASSERT_EQ(t.rows.size(), 10u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.stddev, 0.0);
    if (row.metric == EvalMetric::kMonotonicity) {
      EXPECT_GE(row.mean, -1.0);
      EXPECT_LE(row.mean, 1.0);
    }
  }
}

TEST(EvaluateCorpusTest, RandomPointingIsAtChance) {
  Grid quarter(16, 16, 0.0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) quarter(y + 4, x + 6) = 1.0;
  }
  std::vector<LabeledImage> corpus(600, {Image(16, 16, 1), GroundTruth(quarter), 0});
  EvalConfig config;
  config.methods = {EvalMethod::kRandom};
  config.metrics = {EvalMetric::kPointing};
  config.repeats = 1;
  config.seed = 4;
  const ScoreTable t = evaluate_corpus(corpus, HogExtractor(), config);
  EXPECT_NEAR(t.rows[0].mean, 0.25, 0.05);
}

TEST(EvaluateCorpusTest, ConfigValidation) {
  EvalConfig c;
  c.repeats = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = EvalConfig{};
  c.methods.clear();
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = EvalConfig{};
  c.n_masks = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

}  // namespace
}  // namespace relax
