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

#include "relax/relax_engine.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relax {

namespace {

double relative_deviation(double a, double b) {
  const double scale =
      std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
  return std::abs(a - b) / scale;
}

std::string explanation_digest(const MaskSequence& masks,
                               const Extractor& extractor,
                               const RelaxOptions& options) {
  std::string text = masks.describe() + "|" + extractor.describe() +
                     "|kernel=cosine|norm=";
  text += options.normalization == UncertaintyNormalization::kWeightedSample
              ? "weighted"
              : "permask";
  return fnv1a_hex(text);
}

void check_masks(const Image& image, const MaskSequence& masks) {
  if (masks.size() < 2) {
    throw InvalidArgument("at least two masks are required");
  }
  if (masks.height() != image.height() || masks.width() != image.width()) {
    throw InvalidArgument("mask sequence shape does not match the image");
  }
}

// Evaluates chunks of masks and hands (mask, similarity) pairs to `sink` in
// increasing index order.
template <typename Sink>
std::size_t for_each_similarity(const Image& image, const Extractor& extractor,
                                const MaskSequence& masks,
                                const RelaxOptions& options, Sink&& sink) {
  Embedding reference = extractor.extract(image);
  const std::size_t n = masks.size();
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  std::size_t zero_norm = 0;
  std::vector<Mask> chunk_masks;
  std::vector<Image> chunk_images;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t count = std::min(chunk, n - start);
    chunk_masks.assign(count, Mask());
    chunk_images.assign(count, Image());
    parallel_for(count, [&](std::size_t k) {
      chunk_masks[k] = masks.mask(start + k);
      chunk_images[k] = masks.apply(image, chunk_masks[k], start + k);
    });
    std::vector<Embedding> embeddings;
    try {
      embeddings = extractor.extract_batch(chunk_images);
    } catch (const ExtractorError& e) {
      if (e.item()) {
        const std::size_t index = start + *e.item();
        throw ExtractorError(
            "extractor failed on mask " + std::to_string(index) + ": " + e.what(),
            index);
      }
      throw ExtractorError("extractor failed on masks " + std::to_string(start) +
                           ".." + std::to_string(start + count - 1) + ": " +
                           e.what());
    }
    if (embeddings.size() != count) {
      throw ExtractorError("extractor returned " +
                           std::to_string(embeddings.size()) +
                           " embeddings for " + std::to_string(count) + " masks");
    }
    for (std::size_t k = 0; k < count; ++k) {
      if (embeddings[k].dim() != reference.dim()) {
        throw ExtractorError("extractor output dimension changed on mask " +
                                 std::to_string(start + k),
                             start + k);
      }
      const Similarity s = cosine_similarity(reference, embeddings[k]);
      if (s.zero_norm) ++zero_norm;
      sink(start + k, chunk_masks[k], s.value);
    }
  }
  return zero_norm;
}

}  // namespace

Similarity cosine_similarity(std::span<const double> a,
                             std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("cosine similarity of vectors with dims " +
                          std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  const double s = dot / (std::sqrt(na) * std::sqrt(nb));
  return {std::clamp(s, -1.0, 1.0), false};
}

OnePassAccumulator::OnePassAccumulator(int height, int width)
    : height_(height), width_(width) {
  const std::size_t n =
      static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  weight_.assign(n, kInitialWeight);
  mask_sum_.assign(n, 0.0);
  mean_.assign(n, 0.0);
  sq_.assign(n, 0.0);
}

void OnePassAccumulator::add(const Mask& mask, double s) {
  if (mask.height() != height_ || mask.width() != width_) {
    throw InvalidArgument("mask shape does not match the accumulator");
  }
  for (std::size_t i = 0; i < weight_.size(); ++i) {
    const double m = mask[i];
    weight_[i] += m;
    mask_sum_[i] += m;
    const double prev = mean_[i];
    mean_[i] += m * (s - prev) / weight_[i];
    sq_[i] += (s - mean_[i]) * (s - prev) * m;
  }
  ++count_;
}

Explanation OnePassAccumulator::finish(
    UncertaintyNormalization normalization) const {
  Explanation e;
  e.importance = Grid(height_, width_);
  e.uncertainty = Grid(height_, width_);
  e.mask_weight = Grid(height_, width_);
  e.weighted_importance = Grid(height_, width_);
  e.n_masks = count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < weight_.size(); ++i) {
    // weight * mean telescopes to sum_n s_n M_n exactly.
    const double importance = mean_[i] * weight_[i] / n;
    e.importance[i] = importance;
    e.weighted_importance[i] = mean_[i];
    e.mask_weight[i] = mask_sum_[i];
    if (normalization == UncertaintyNormalization::kPerMask) {
      const double shift = mean_[i] - importance;
      e.uncertainty[i] = (sq_[i] + mask_sum_[i] * shift * shift) / n;
    } else if (mask_sum_[i] > 1.0) {
      e.uncertainty[i] = sq_[i] / (mask_sum_[i] - 1.0);
    } else {
      e.uncertainty[i] = kUndefinedUncertainty;
    }
  }
  return e;
}

Explanation accumulate_one_pass(std::span<const double> similarities,
                                const MaskSequence& masks,
                                UncertaintyNormalization normalization) {
  if (similarities.size() != masks.size()) {
    throw InvalidArgument("one similarity per mask is required");
  }
  OnePassAccumulator acc(masks.height(), masks.width());
  for (std::size_t n = 0; n < masks.size(); ++n) {
    acc.add(masks.mask(n), similarities[n]);
  }
  return acc.finish(normalization);
}

Explanation accumulate_two_pass(std::span<const double> similarities,
                                const MaskSequence& masks,
                                UncertaintyNormalization normalization) {
  if (similarities.size() != masks.size()) {
    throw InvalidArgument("one similarity per mask is required");
  }
  const int h = masks.height();
  const int w = masks.width();
  Explanation e;
  e.importance = Grid(h, w);
  e.uncertainty = Grid(h, w);
  e.mask_weight = Grid(h, w);
  e.weighted_importance = Grid(h, w);
  e.n_masks = static_cast<int>(masks.size());
  const double n = static_cast<double>(masks.size());

  // Pass 1: weighted sums.
  Grid weighted_sum(h, w);
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const Mask m = masks.mask(k);
    for (std::size_t i = 0; i < m.size(); ++i) {
      weighted_sum[i] += similarities[k] * m[i];
      e.mask_weight[i] += m[i];
    }
  }
  for (std::size_t i = 0; i < weighted_sum.size(); ++i) {
    e.importance[i] = weighted_sum[i] / n;
    e.weighted_importance[i] =
        e.mask_weight[i] > 0.0 ? weighted_sum[i] / e.mask_weight[i] : 0.0;
  }

  // Pass 2: replay the masks for the spread around the mean.
  const bool per_mask = normalization == UncertaintyNormalization::kPerMask;
  const Grid& centre = per_mask ? e.importance : e.weighted_importance;
  Grid sq(h, w);
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const Mask m = masks.mask(k);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double d = similarities[k] - centre[i];
      sq[i] += m[i] * d * d;
    }
  }
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (per_mask) {
      e.uncertainty[i] = sq[i] / n;
    } else if (e.mask_weight[i] > 1.0) {
      e.uncertainty[i] = sq[i] / (e.mask_weight[i] - 1.0);
    } else {
      e.uncertainty[i] = kUndefinedUncertainty;
    }
  }
  return e;
}

SimilarityRun masked_similarities(const Image& image, const Extractor& extractor,
                                  const MaskSequence& masks,
                                  const RelaxOptions& options) {
  SimilarityRun run;
  run.similarities.reserve(masks.size());
  run.zero_norm_count = for_each_similarity(
      image, extractor, masks, options,
      [&](std::size_t, const Mask&, double s) { run.similarities.push_back(s); });
  return run;
}

Explanation relax_one_pass(const Image& image, const Extractor& extractor,
                           const MaskSequence& masks,
                           const RelaxOptions& options) {
  check_masks(image, masks);
  OnePassAccumulator acc(image.height(), image.width());
  const std::size_t zero_norm = for_each_similarity(
      image, extractor, masks, options,
      [&](std::size_t, const Mask& m, double s) { acc.add(m, s); });
  Explanation e = acc.finish(options.normalization);
  e.zero_norm_count = zero_norm;
  e.seed = options.seed;
  e.config_digest = explanation_digest(masks, extractor, options);
  return e;
}

Explanation relax_two_pass(const Image& image, const Extractor& extractor,
                           const MaskSequence& masks,
                           const RelaxOptions& options) {
  check_masks(image, masks);
  const SimilarityRun run = masked_similarities(image, extractor, masks, options);
  Explanation e =
      accumulate_two_pass(run.similarities, masks, options.normalization);
  e.zero_norm_count = run.zero_norm_count;
  e.seed = options.seed;
  e.config_digest = explanation_digest(masks, extractor, options);
  return e;
}

Explanation relax_one_pass(const Image& image, const Extractor& extractor,
                           const MaskBatchSpec& spec, RelaxOptions options) {
  options.seed = spec.rng.seed;
  const SeededMaskSequence masks(spec, image.height(), image.width());
  return relax_one_pass(image, extractor, masks, options);
}

Explanation relax_two_pass(const Image& image, const Extractor& extractor,
                           const MaskBatchSpec& spec, RelaxOptions options) {
  options.seed = spec.rng.seed;
  const SeededMaskSequence masks(spec, image.height(), image.width());
  return relax_two_pass(image, extractor, masks, options);
}

void UrelaxPolicy::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("U-RELAX gamma must be positive");
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

UrelaxResult urelax_filter(const Explanation& explanation,
                           const UrelaxPolicy& policy) {
  policy.validate();
  std::vector<double> defined;
  defined.reserve(explanation.uncertainty.size());
  for (std::size_t i = 0; i < explanation.uncertainty.size(); ++i) {
    if (explanation.uncertainty_defined(i)) {
      defined.push_back(explanation.uncertainty[i]);
    }
  }
  UrelaxResult result;
  result.importance = Grid(explanation.height(), explanation.width());
  if (defined.empty()) return result;

  double aggregate = 0.0;
  if (policy.aggregation == UncertaintyAggregation::kMean) {
    for (double u : defined) aggregate += u;
    aggregate /= static_cast<double>(defined.size());
  } else {
    aggregate = median(std::move(defined));
  }
  result.threshold = policy.gamma * aggregate;
  for (std::size_t i = 0; i < explanation.uncertainty.size(); ++i) {
    if (explanation.uncertainty_defined(i) &&
        explanation.uncertainty[i] < result.threshold) {
      result.importance[i] = explanation.importance[i];
      ++result.kept;
    }
  }
  return result;
}

void BoundQuery::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("delta must lie in (0, 1)");
  }
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be positive");
}

std::int64_t mask_count_bound(const BoundQuery& query) {
  query.validate();
  const double n = -std::log(query.delta / 2.0) / (2.0 * query.t * query.t);
  if (n > 9.0e18) throw InvalidArgument("mask count bound overflows");
  return static_cast<std::int64_t>(std::ceil(n));
}

double bound_tolerance(double delta, std::int64_t n_masks) {
  BoundQuery{delta, 1.0}.validate();
  if (n_masks < 1) throw InvalidArgument("mask count must be positive");
  return std::sqrt(-std::log(delta / 2.0) / (2.0 * static_cast<double>(n_masks)));
}

double parzen_identity_check(std::span<const double> similarities,
                             std::span<const Mask> masks) {
  if (masks.empty()) throw InvalidArgument("at least one mask is required");
  const ExplicitMaskSequence seq(std::vector<Mask>(masks.begin(), masks.end()));
  const Explanation e = accumulate_two_pass(
      similarities, seq, UncertaintyNormalization::kWeightedSample);
  const double n = static_cast<double>(masks.size());

  double worst = 0.0;
  for (std::size_t i = 0; i < e.importance.size(); ++i) {
    double total = 0.0;
    for (const Mask& m : masks) total += m[i];
    if (total <= 0.0) continue;
    double parzen = 0.0;
    for (std::size_t k = 0; k < masks.size(); ++k) {
      parzen += similarities[k] * (masks[k][i] / total);
    }
    const double scaled = e.importance[i] * n / e.mask_weight[i];
    worst = std::max(worst, relative_deviation(scaled, parzen));
  }
  return worst;
}

double rkhs_identity_check(const Embedding& h,
                           std::span<const Embedding> masked_embeddings,
                           std::span<const Mask> masks) {
  if (masks.empty() || masks.size() != masked_embeddings.size()) {
    throw InvalidArgument("one masked embedding per mask is required");
  }
  std::vector<double> similarities;
  similarities.reserve(masks.size());
  for (const Embedding& e : masked_embeddings) {
    similarities.push_back(cosine_similarity(h, e).value);
  }
  const ExplicitMaskSequence seq(std::vector<Mask>(masks.begin(), masks.end()));
  const Explanation e = accumulate_two_pass(
      similarities, seq, UncertaintyNormalization::kWeightedSample);

  // Explicit feature map of the cosine kernel.
  auto normalise = [](const Embedding& v) {
    double norm = 0.0;
    for (double x : v.values()) norm += x * x;
    norm = std::sqrt(norm);
    std::vector<double> out(v.values().begin(), v.values().end());
    if (norm > 0.0) {
      for (double& x : out) x /= norm;
    } else {
      std::fill(out.begin(), out.end(), 0.0);
    }
    return out;
  };
  const std::vector<double> phi_h = normalise(h);
  std::vector<std::vector<double>> phi;
  phi.reserve(masked_embeddings.size());
  for (const Embedding& v : masked_embeddings) {
    if (v.dim() != h.dim()) throw InvalidArgument("embedding dims differ");
    phi.push_back(normalise(v));
  }

  const double n = static_cast<double>(masks.size());
  std::vector<double> mean(h.dim());
  double worst = 0.0;
  for (std::size_t i = 0; i < e.importance.size(); ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t k = 0; k < masks.size(); ++k) {
      const double m = masks[k][i];
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += phi[k][d] * m;
    }
    double score = 0.0;
    for (std::size_t d = 0; d < mean.size(); ++d) score += phi_h[d] * (mean[d] / n);
    worst = std::max(worst, relative_deviation(e.importance[i], score));
  }
  return worst;
}

std::vector<BoundCurveRow> bound_verification_run(const Image& image,
                                                  const Extractor& extractor,
                                                  const BoundRunConfig& config) {
  if (config.n_grid.empty() || config.n_repeats < 1 ||
      config.reference_runs < 1) {
    throw InvalidArgument("bound run needs a grid, repeats and reference runs");
  }
  const int max_n = *std::max_element(config.n_grid.begin(), config.n_grid.end());
  if (*std::min_element(config.n_grid.begin(), config.n_grid.end()) < 2) {
    throw InvalidArgument("grid mask counts must be at least 2");
  }
  if (config.reference_n < max_n) {
    throw InvalidArgument("reference mask count must cover the grid");
  }
  const int h = image.height();
  const int w = image.width();

  Grid reference(h, w);
  for (int k = 0; k < config.reference_runs; ++k) {
    MaskBatchSpec spec{config.reference_n, config.strategy,
                       RngSpec{config.reference_seed + static_cast<std::uint64_t>(k), 0}};
    const Explanation e = relax_one_pass(image, extractor, spec, config.options);
    for (std::size_t i = 0; i < reference.size(); ++i) {
      reference[i] += e.importance[i] / config.reference_runs;
    }
  }

  std::vector<int> sorted = config.n_grid;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<BoundCurveRow> rows;
  for (int n : sorted) {
    BoundCurveRow row;
    row.n_masks = n;
    row.bound_t = bound_tolerance(config.delta, n);
    rows.push_back(row);
  }

  for (int r = 0; r < config.n_repeats; ++r) {
    MaskBatchSpec spec{max_n, config.strategy,
                       RngSpec{config.repeat_seed + static_cast<std::uint64_t>(r), 0}};
    const SeededMaskSequence masks(spec, h, w);
    OnePassAccumulator acc(h, w);
    std::size_t next = 0;
    for_each_similarity(
        image, extractor, masks, config.options,
        [&](std::size_t index, const Mask& m, double s) {
          acc.add(m, s);
          while (next < sorted.size() &&
                 static_cast<std::size_t>(sorted[next]) == index + 1) {
            const Explanation e = acc.finish(config.options.normalization);
            double err = 0.0;
            for (std::size_t i = 0; i < reference.size(); ++i) {
              err = std::max(err, std::abs(e.importance[i] - reference[i]));
            }
            rows[next].errors.push_back(err);
            ++next;
          }
        });
  }
  for (auto& row : rows) {
    double sum = 0.0;
    for (double e : row.errors) sum += e;
    row.mean_error = sum / static_cast<double>(row.errors.size());
  }
  return rows;
}

}  // namespace relax
