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

// Representation explanations by masking.
//
// For an image X with embedding h = f(X) and masks M_1..M_N, each masked
// embedding h_n = f(X * M_n) is scored by its similarity s_n = s(h, h_n) to
// the unmasked one. Per pixel (i, j):
//
//   importance   R_ij = (1/N) sum_n s_n M_ij(n)
//   mask weight  W_ij = sum_n M_ij(n)
//   weighted     P_ij = sum_n s_n M_ij(n) / W_ij
//   uncertainty  U_ij = sum_n M_ij(n) (s_n - P_ij)^2 / (W_ij - 1)
//
// The one-pass estimator updates P and the weighted sum of squares with a
// weighted Welford recurrence and recovers R = P * W / N at the end; the
// two-pass estimator computes R and P first and replays the masks for U.

#ifndef RELAX_RELAX_ENGINE_H_
#define RELAX_RELAX_ENGINE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relax/core.h"
#include "relax/extractors.h"
#include "relax/maskgen.h"

namespace relax {

enum class SimilarityKernel { kCosine };

struct Similarity {
  double value = 0.0;
  // Either vector had zero norm; value is then defined as 0.
  bool zero_norm = false;
};

// <a, b> / (|a| |b|). Throws InvalidArgument when dimensions differ.
Similarity cosine_similarity(std::span<const double> a, std::span<const double> b);
inline Similarity cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(a.values(), b.values());
}

enum class UncertaintyNormalization {
  // sum_n M (s - P)^2 / (W - 1); undefined where W <= 1.
  kWeightedSample,
  // (1/N) sum_n M (s - R)^2 around the unweighted importance R.
  kPerMask,
};

struct RelaxOptions {
  SimilarityKernel kernel = SimilarityKernel::kCosine;
  UncertaintyNormalization normalization =
      UncertaintyNormalization::kWeightedSample;
  // Masks evaluated per extractor call.
  std::size_t chunk_size = 32;
  // Recorded in the explanation.
  std::uint64_t seed = 0;
};

// Initial mask weight of the one-pass recurrence; keeps the first update
// finite when a pixel's first mask value is zero.
inline constexpr double kInitialWeight = 1e-12;

// Running state of the one-pass estimator.
class OnePassAccumulator {
 public:
  OnePassAccumulator(int height, int width);

  void add(const Mask& mask, double similarity);
  Explanation finish(UncertaintyNormalization normalization) const;
  int count() const { return count_; }

 private:
  int height_;
  int width_;
  int count_ = 0;
  std::vector<double> weight_;      // kInitialWeight + sum M
  std::vector<double> mask_sum_;    // sum M
  std::vector<double> mean_;        // weighted mean P
  std::vector<double> sq_;          // weighted sum of squared deviations
};

// Two-pass accumulation over precomputed similarities; `masks` is replayed.
Explanation accumulate_two_pass(std::span<const double> similarities,
                                const MaskSequence& masks,
                                UncertaintyNormalization normalization);

// One-pass accumulation over precomputed similarities.
Explanation accumulate_one_pass(std::span<const double> similarities,
                                const MaskSequence& masks,
                                UncertaintyNormalization normalization);

// Similarities s_n for every mask of the sequence, evaluated in chunks.
// Extractor failures are rethrown as ExtractorError naming the mask index.
struct SimilarityRun {
  std::vector<double> similarities;
  std::size_t zero_norm_count = 0;
};
SimilarityRun masked_similarities(const Image& image, const Extractor& extractor,
                                  const MaskSequence& masks,
                                  const RelaxOptions& options = {});

// Requires at least two masks.
Explanation relax_one_pass(const Image& image, const Extractor& extractor,
                           const MaskSequence& masks,
                           const RelaxOptions& options = {});
Explanation relax_two_pass(const Image& image, const Extractor& extractor,
                           const MaskSequence& masks,
                           const RelaxOptions& options = {});

// Convenience overloads drawing masks from `spec`; the explanation records
// spec.rng.seed.
Explanation relax_one_pass(const Image& image, const Extractor& extractor,
                           const MaskBatchSpec& spec,
                           RelaxOptions options = {});
Explanation relax_two_pass(const Image& image, const Extractor& extractor,
                           const MaskBatchSpec& spec,
                           RelaxOptions options = {});

enum class UncertaintyAggregation { kMean, kMedian };

struct UrelaxPolicy {
  UncertaintyAggregation aggregation = UncertaintyAggregation::kMedian;
  double gamma = 1.0;

  void validate() const;
};

struct UrelaxResult {
  Grid importance;
  // Pixels with uncertainty strictly below this survive.
  double threshold = 0.0;
  std::size_t kept = 0;
};

// Zeroes every pixel whose uncertainty is not strictly below
// gamma * aggregate(uncertainty); the aggregate runs over pixels with
// defined uncertainty, and pixels with undefined uncertainty are zeroed.
UrelaxResult urelax_filter(const Explanation& explanation,
                           const UrelaxPolicy& policy);

// Median with the mean of the two middle values for even counts.
double median(std::vector<double> values);

struct BoundQuery {
  double delta = 0.01;
  double t = 0.03;

  void validate() const;
};

// Smallest N with N >= -ln(delta/2) / (2 t^2).
std::int64_t mask_count_bound(const BoundQuery& query);

// The tolerance t guaranteed by N masks at confidence 1 - delta.
double bound_tolerance(double delta, std::int64_t n_masks);

// Largest relative deviation between R * N / W computed by the estimator and
// the weighted Parzen estimate sum_n s_n (M_n / W), over pixels with W > 0.
double parzen_identity_check(std::span<const double> similarities,
                             std::span<const Mask> masks);

// Largest relative deviation between the estimator's importance and
// <phi(h), (1/N) sum_n phi(h_n) M_n> with phi(x) = x / |x|.
double rkhs_identity_check(const Embedding& h,
                           std::span<const Embedding> masked_embeddings,
                           std::span<const Mask> masks);

struct BoundRunConfig {
  std::vector<int> n_grid = {250, 500, 1000, 3000};
  int n_repeats = 5;
  int reference_n = 10000;
  // Reference importance is averaged over this many independent runs.
  int reference_runs = 10;
  double delta = 0.01;
  MaskStrategy strategy;
  // Reference run k uses seed reference_seed + k; repeat r uses
  // repeat_seed + r.
  std::uint64_t reference_seed = 1;
  std::uint64_t repeat_seed = 1000;
  RelaxOptions options;
};

struct BoundCurveRow {
  int n_masks = 0;
  // Mean over repeats of max_ij |R^(N) - R_ref|.
  double mean_error = 0.0;
  std::vector<double> errors;
  double bound_t = 0.0;
};

// Empirical estimation error against a high-mask-count reference. Each
// repeat evaluates one mask stream and reads the estimate at every N of the
// grid from its prefix. Rows come in increasing N with duplicates merged.
std::vector<BoundCurveRow> bound_verification_run(const Image& image,
                                                  const Extractor& extractor,
                                                  const BoundRunConfig& config);

}  // namespace relax

#endif  // RELAX_RELAX_ENGINE_H_
