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

// Localisation and faithfulness scores for importance maps.
//
// Wherever pixels are ranked, higher importance comes first and ties go to
// the smaller row-major index.

#ifndef RELAX_EVALMETRICS_H_
#define RELAX_EVALMETRICS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relax/baselines.h"
#include "relax/core.h"
#include "relax/extractors.h"
#include "relax/maskgen.h"
#include "relax/relax_engine.h"

namespace relax {

// Binary union of all object regions of an image.
class GroundTruth {
 public:
  GroundTruth() = default;
  // Every value must be 0 or 1, with at least one 1.
  explicit GroundTruth(Grid mask);

  const Grid& mask() const { return mask_; }
  std::size_t positives() const { return positives_; }
  bool contains(std::size_t i) const { return mask_[i] != 0.0; }
  int height() const { return mask_.height(); }
  int width() const { return mask_.width(); }

 private:
  Grid mask_;
  std::size_t positives_ = 0;
};

struct LabeledImage {
  Image image;
  GroundTruth gt;
  int label = 0;
};

// Pixel indices ordered by descending value, ties by ascending index.
std::vector<std::size_t> rank_pixels(std::span<const double> values);

// 1 when the highest-ranked pixel lies inside the ground truth.
int pointing_game(const Grid& importance, const GroundTruth& gt);

// Fraction of the k highest-ranked pixels inside the ground truth.
double topk_intersection(const Grid& importance, const GroundTruth& gt,
                         std::size_t k);

// topk_intersection with k = |GT|.
double relevance_rank(const Grid& importance, const GroundTruth& gt);

struct Correlation {
  double value = 0.0;
  // One of the inputs was constant; value is then 0.
  bool degenerate = false;
};

// Spearman rank correlation, with tied values given their average rank.
Correlation spearman_correlation(std::span<const double> a,
                                 std::span<const double> b);

// Nearest-centroid classifier with softmax over negative squared distances.
class ProbeModel {
 public:
  ProbeModel(std::vector<Embedding> centroids, double temperature = 1.0);

  // Centroids are the per-label means of the embeddings; labels must be
  // 0..K-1 with K >= 2 and every label present.
  static ProbeModel train(std::span<const Embedding> embeddings,
                          std::span<const int> labels,
                          double temperature = 1.0);

  std::vector<double> probabilities(const Embedding& embedding) const;
  int predict(const Embedding& embedding) const;
  std::size_t classes() const { return centroids_.size(); }
  const std::vector<Embedding>& centroids() const { return centroids_; }

 private:
  std::vector<Embedding> centroids_;
  double temperature_;
};

struct MonotonicityResult {
  Correlation correlation;
  // Per bin, from most to least important.
  std::vector<double> bin_importance;
  std::vector<double> probability_drop;
};

// Pixels are ranked by |importance| and split into `bins` groups of equal
// size (differing by at most one). Each group is zeroed in turn and the drop
// in the probe's probability of the class predicted for the intact image is
// recorded. Returns the Spearman correlation between each group's mean
// |importance| and its drop; an all-equal importance map is degenerate.
MonotonicityResult monotonicity(const Grid& importance, const Image& image,
                                const Extractor& extractor,
                                const ProbeModel& probe, int bins = 10);

enum class EvalMethod { kRelax, kUrelax, kSaliency, kSmoothGrad, kRandom };
enum class EvalMetric { kPointing, kTopk, kRank, kMonotonicity };

// Accept "relax", "urelax", "saliency", "smoothgrad", "random" and
// "pointing", "topk", "rank", "monotonicity".
EvalMethod parse_eval_method(const std::string& name);
EvalMetric parse_eval_metric(const std::string& name);
std::string display_name(EvalMethod method);
std::string display_name(EvalMetric metric);

// Which per-pixel RELAX estimate is scored. The weighted mean is what the
// running-mean recurrence of the one-pass estimator returns; U-RELAX filters
// the same map.
enum class RelaxMap {
  kImportance,  // (1/N) sum s M
  kWeighted,    // sum s M / sum M
};

struct EvalConfig {
  std::vector<EvalMethod> methods = {EvalMethod::kRelax, EvalMethod::kRandom};
  std::vector<EvalMetric> metrics = {EvalMetric::kPointing, EvalMetric::kTopk,
                                     EvalMetric::kRank};
  int repeats = 3;
  // Repeat r draws masks and random maps from seed + r.
  std::uint64_t seed = 0;
  int n_masks = 3000;
  MaskStrategy strategy;
  RelaxOptions relax;
  RelaxMap relax_map = RelaxMap::kWeighted;
  UrelaxPolicy urelax;
  SaliencySpec saliency;
  // 0 selects k = |GT| per image.
  std::size_t topk = 0;
  int bins = 10;
  double probe_temperature = 1.0;

  void validate() const;
};

struct ScoreRow {
  EvalMethod method;
  EvalMetric metric;
  // Mean and sample standard deviation over repeats of the per-repeat
  // corpus mean.
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
  std::vector<double> per_repeat;
  // Monotonicity evaluations that were degenerate, summed over repeats.
  std::size_t degenerate = 0;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;

  const ScoreRow& find(EvalMethod method, EvalMetric metric) const;
};

ScoreTable evaluate_corpus(std::span<const LabeledImage> corpus,
                           const Extractor& extractor, const EvalConfig& config);

// Comma-separated with the header "method,metric,mean,std,n".
std::string format_score_table(const ScoreTable& table);
void write_score_table(const std::filesystem::path& path, const ScoreTable& table);

}  // namespace relax

#endif  // RELAX_EVALMETRICS_H_
