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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

#include "relax/tensor_io.h"

namespace relax {

namespace {

// Streams of the per-repeat seed.
constexpr std::uint32_t kMaskStream = 0;
constexpr std::uint32_t kRandomStream = 16;
constexpr std::uint32_t kSmoothGradStream = 32;

// The explanation whose importance field is the scored RELAX map.
Explanation scored_explanation(const Explanation& e, RelaxMap which) {
  if (which == RelaxMap::kImportance) return e;
  Explanation out = e;
  out.importance = e.weighted_importance;
  return out;
}

void check_shape(const Grid& importance, const GroundTruth& gt) {
  if (importance.height() != gt.height() || importance.width() != gt.width()) {
    throw InvalidArgument("importance map and ground truth differ in shape");
  }
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

GroundTruth::GroundTruth(Grid mask) : mask_(std::move(mask)) {
  for (double v : mask_.values()) {
    if (v != 0.0 && v != 1.0) throw InvalidArgument("ground truth must be binary");
    if (v == 1.0) ++positives_;
  }
  if (positives_ == 0) {
    throw InvalidArgument("ground truth needs at least one positive pixel");
  }
}

std::vector<std::size_t> rank_pixels(std::span<const double> values) {
  for (double v : values) {
    if (std::isnan(v)) throw InvalidArgument("cannot rank NaN importance");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  return order;
}

int pointing_game(const Grid& importance, const GroundTruth& gt) {
  check_shape(importance, gt);
  const auto values = importance.values();
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (std::isnan(values[i])) throw InvalidArgument("cannot rank NaN importance");
    if (values[i] > values[best]) best = i;
  }
  return gt.contains(best) ? 1 : 0;
}

double topk_intersection(const Grid& importance, const GroundTruth& gt,
                         std::size_t k) {
  check_shape(importance, gt);
  if (k < 1 || k > importance.size()) {
    throw InvalidArgument("k must lie in [1, H*W]");
  }
  const auto order = rank_pixels(importance.values());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += gt.contains(order[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

double relevance_rank(const Grid& importance, const GroundTruth& gt) {
  return topk_intersection(importance, gt, gt.positives());
}

Correlation spearman_correlation(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidArgument("correlation needs two sequences of equal length >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = mean_of(ra);
  const double mb = mean_of(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

ProbeModel::ProbeModel(std::vector<Embedding> centroids, double temperature)
    : centroids_(std::move(centroids)), temperature_(temperature) {
  if (centroids_.size() < 2) throw InvalidArgument("a probe needs at least two classes");
  for (const auto& c : centroids_) {
    if (c.dim() != centroids_.front().dim()) {
      throw InvalidArgument("probe centroids differ in dimension");
    }
  }
  if (!(temperature_ > 0.0)) throw InvalidArgument("probe temperature must be positive");
}

ProbeModel ProbeModel::train(std::span<const Embedding> embeddings,
                             std::span<const int> labels, double temperature) {
  if (embeddings.size() != labels.size() || embeddings.empty()) {
    throw InvalidArgument("probe training needs one label per embedding");
  }
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  const std::size_t dim = embeddings.front().dim();
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(std::max(k, 0)),
                                        std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(sums.size(), 0);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (labels[i] < 0) throw InvalidArgument("probe labels must be non-negative");
    if (embeddings[i].dim() != dim) throw InvalidArgument("embeddings differ in dimension");
    auto& s = sums[static_cast<std::size_t>(labels[i])];
    for (std::size_t d = 0; d < dim; ++d) s[d] += embeddings[i][d];
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  std::vector<Embedding> centroids;
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] == 0) {
      throw InvalidArgument("probe label " + std::to_string(c) + " has no examples");
    }
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
    centroids.emplace_back(std::move(sums[c]));
  }
  return ProbeModel(std::move(centroids), temperature);
}

std::vector<double> ProbeModel::probabilities(const Embedding& embedding) const {
  std::vector<double> logits(centroids_.size());
  for (std::size_t c = 0; c < centroids_.size(); ++c) {
    if (embedding.dim() != centroids_[c].dim()) {
      throw InvalidArgument("embedding dimension does not match the probe");
    }
    double d2 = 0.0;
    for (std::size_t d = 0; d < embedding.dim(); ++d) {
      const double diff = embedding[d] - centroids_[c][d];
      d2 += diff * diff;
    }
    logits[c] = -d2 / temperature_;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

int ProbeModel::predict(const Embedding& embedding) const {
  const auto p = probabilities(embedding);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

MonotonicityResult monotonicity(const Grid& importance, const Image& image,
                                const Extractor& extractor,
                                const ProbeModel& probe, int bins) {
  if (importance.height() != image.height() || importance.width() != image.width()) {
    throw InvalidArgument("importance map and image differ in shape");
  }
  if (bins < 3 || static_cast<std::size_t>(bins) > importance.size()) {
    throw InvalidArgument("monotonicity needs 3 <= bins <= H*W");
  }
  std::vector<double> magnitude(importance.size());
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    magnitude[i] = std::abs(importance[i]);
  }
  const auto order = rank_pixels(magnitude);
  const auto base = probe.probabilities(extractor.extract(image));
  const std::size_t cls =
      static_cast<std::size_t>(std::max_element(base.begin(), base.end()) - base.begin());

  MonotonicityResult result;
  result.bin_importance.resize(static_cast<std::size_t>(bins));
  result.probability_drop.resize(static_cast<std::size_t>(bins));
  const std::size_t n = order.size();
  const std::size_t c = static_cast<std::size_t>(image.channels());
  for (std::size_t b = 0; b < static_cast<std::size_t>(bins); ++b) {
    const std::size_t lo = b * n / static_cast<std::size_t>(bins);
    const std::size_t hi = (b + 1) * n / static_cast<std::size_t>(bins);
    Image masked = image;
    auto data = masked.mutable_data();
    double sum = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      sum += magnitude[order[k]];
      for (std::size_t ch = 0; ch < c; ++ch) data[order[k] * c + ch] = 0.0f;
    }
    result.bin_importance[b] = sum / static_cast<double>(hi - lo);
    result.probability_drop[b] =
        base[cls] - probe.probabilities(extractor.extract(masked))[cls];
  }
  const bool flat = std::all_of(magnitude.begin(), magnitude.end(),
                                [&](double v) { return v == magnitude.front(); });
  if (flat) {
    result.correlation = {0.0, true};
  } else {
    result.correlation =
        spearman_correlation(result.bin_importance, result.probability_drop);
  }
  return result;
}

EvalMethod parse_eval_method(const std::string& name) {
  if (name == "relax") return EvalMethod::kRelax;
  if (name == "urelax") return EvalMethod::kUrelax;
  if (name == "saliency") return EvalMethod::kSaliency;
  if (name == "smoothgrad") return EvalMethod::kSmoothGrad;
  if (name == "random") return EvalMethod::kRandom;
  throw InvalidArgument("unknown method '" + name +
                        "' (valid: relax, urelax, saliency, smoothgrad, random)");
}

EvalMetric parse_eval_metric(const std::string& name) {
  if (name == "pointing") return EvalMetric::kPointing;
  if (name == "topk") return EvalMetric::kTopk;
  if (name == "rank") return EvalMetric::kRank;
  if (name == "monotonicity") return EvalMetric::kMonotonicity;
  throw InvalidArgument("unknown metric '" + name +
                        "' (valid: pointing, topk, rank, monotonicity)");
}

std::string display_name(EvalMethod method) {
  switch (method) {
    case EvalMethod::kRelax: return "RELAX";
    case EvalMethod::kUrelax: return "U-RELAX";
    case EvalMethod::kSaliency: return "Saliency";
    case EvalMethod::kSmoothGrad: return "SmoothGrad";
    case EvalMethod::kRandom: return "Random";
  }
  return "?";
}

std::string display_name(EvalMetric metric) {
  switch (metric) {
    case EvalMetric::kPointing: return "pointing_game";
    case EvalMetric::kTopk: return "topk_intersection";
    case EvalMetric::kRank: return "relevance_rank";
    case EvalMetric::kMonotonicity: return "monotonicity";
  }
  return "?";
}

void EvalConfig::validate() const {
  if (methods.empty() || metrics.empty()) {
    throw InvalidArgument("evaluation needs at least one method and one metric");
  }
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (n_masks < 2) throw InvalidArgument("RELAX needs at least two masks");
  if (bins < 3) throw InvalidArgument("monotonicity needs at least 3 bins");
  urelax.validate();
  saliency.validate();
}

const ScoreRow& ScoreTable::find(EvalMethod method, EvalMetric metric) const {
  for (const auto& row : rows) {
    if (row.method == method && row.metric == metric) return row;
  }
  throw InvalidArgument("no score for " + display_name(method) + " / " +
                        display_name(metric));
}

ScoreTable evaluate_corpus(std::span<const LabeledImage> corpus,
                           const Extractor& extractor, const EvalConfig& config) {
  config.validate();
  if (corpus.empty()) throw InvalidArgument("evaluation corpus is empty");
  const std::size_t n_images = corpus.size();
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_metrics = config.metrics.size();

  const bool needs_probe =
      std::find(config.metrics.begin(), config.metrics.end(),
                EvalMetric::kMonotonicity) != config.metrics.end();
  std::optional<ProbeModel> probe;
  if (needs_probe) {
    std::vector<Embedding> embeddings(n_images);
    std::vector<int> labels(n_images);
    parallel_for(n_images, [&](std::size_t i) {
      embeddings[i] = extractor.extract(corpus[i].image);
      labels[i] = corpus[i].label;
    });
    probe = ProbeModel::train(embeddings, labels, config.probe_temperature);
  }

  // scores[(method * n_metrics + metric) * repeats + r]
  std::vector<double> scores(n_methods * n_metrics *
                             static_cast<std::size_t>(config.repeats));
  std::vector<std::size_t> degenerate(n_methods * n_metrics, 0);
  std::vector<Grid> saliency_cache(n_images);

  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    // per_image[(i * n_methods + method) * n_metrics + metric]
    std::vector<double> per_image(n_images * n_methods * n_metrics);
    std::vector<char> per_image_degenerate(per_image.size(), 0);
    parallel_for(n_images, [&](std::size_t i) {
      const LabeledImage& item = corpus[i];
      std::optional<Explanation> explanation;
      auto relax_map = [&]() -> const Explanation& {
        if (!explanation) {
          MaskBatchSpec spec;
          spec.n_masks = config.n_masks;
          spec.strategy = config.strategy;
          spec.rng = {seed, kMaskStream};
          explanation = relax_one_pass(item.image, extractor, spec, config.relax);
        }
        return *explanation;
      };
      for (std::size_t m = 0; m < n_methods; ++m) {
        Grid map;
        switch (config.methods[m]) {
          case EvalMethod::kRelax:
            map = config.relax_map == RelaxMap::kImportance
                      ? relax_map().importance
                      : relax_map().weighted_importance;
            break;
          case EvalMethod::kUrelax:
            map = urelax_filter(scored_explanation(relax_map(), config.relax_map),
                                config.urelax)
                      .importance;
            break;
          case EvalMethod::kSaliency:
            if (saliency_cache[i].empty()) {
              saliency_cache[i] = saliency(item.image, extractor, config.saliency);
            }
            map = saliency_cache[i];
            break;
          case EvalMethod::kSmoothGrad: {
            SaliencySpec spec = config.saliency;
            SmoothGradParams params = spec.smoothgrad.value_or(SmoothGradParams{});
            params.rng = {seed, kSmoothGradStream + static_cast<std::uint32_t>(i)};
            spec.smoothgrad = params;
            map = smoothgrad(item.image, extractor, spec);
            break;
          }
          case EvalMethod::kRandom: {
            map = Grid(item.image.height(), item.image.width());
            Rng rng({seed, kRandomStream}, i);
            for (double& v : map.values()) v = rng.uniform();
            break;
          }
        }
        for (std::size_t k = 0; k < n_metrics; ++k) {
          const std::size_t slot = (i * n_methods + m) * n_metrics + k;
          switch (config.metrics[k]) {
            case EvalMetric::kPointing:
              per_image[slot] = pointing_game(map, item.gt);
              break;
            case EvalMetric::kTopk:
              per_image[slot] = topk_intersection(
                  map, item.gt, config.topk == 0 ? item.gt.positives() : config.topk);
              break;
            case EvalMetric::kRank:
              per_image[slot] = relevance_rank(map, item.gt);
              break;
            case EvalMetric::kMonotonicity: {
              const auto result =
                  monotonicity(map, item.image, extractor, *probe, config.bins);
              per_image[slot] = result.correlation.value;
              per_image_degenerate[slot] = result.correlation.degenerate ? 1 : 0;
              break;
            }
          }
        }
      }
    });
    for (std::size_t m = 0; m < n_methods; ++m) {
      for (std::size_t k = 0; k < n_metrics; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n_images; ++i) {
          const std::size_t slot = (i * n_methods + m) * n_metrics + k;
          sum += per_image[slot];
          degenerate[m * n_metrics + k] += per_image_degenerate[slot];
        }
        scores[(m * n_metrics + k) * static_cast<std::size_t>(config.repeats) +
               static_cast<std::size_t>(r)] = sum / static_cast<double>(n_images);
      }
    }
  }

  ScoreTable table;
  for (std::size_t m = 0; m < n_methods; ++m) {
    for (std::size_t k = 0; k < n_metrics; ++k) {
      ScoreRow row;
      row.method = config.methods[m];
      row.metric = config.metrics[k];
      row.n = config.repeats;
      const auto first = scores.begin() + static_cast<std::ptrdiff_t>(
                                              (m * n_metrics + k) *
                                              static_cast<std::size_t>(config.repeats));
      row.per_repeat.assign(first, first + config.repeats);
      row.mean = mean_of(row.per_repeat);
      if (row.n > 1) {
        double ss = 0.0;
        for (double v : row.per_repeat) ss += (v - row.mean) * (v - row.mean);
        row.stddev = std::sqrt(ss / (row.n - 1));
      }
      row.degenerate = degenerate[m * n_metrics + k];
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string format_score_table(const ScoreTable& table) {
  std::string out = "method,metric,mean,std,n\n";
  char buf[64];
  for (const auto& row : table.rows) {
    out += display_name(row.method) + "," + display_name(row.metric) + ",";
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%d\n", row.mean, row.stddev, row.n);
    out += buf;
  }
  return out;
}

void write_score_table(const std::filesystem::path& path, const ScoreTable& table) {
  const std::string text = format_score_table(table);
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

}  // namespace relax
