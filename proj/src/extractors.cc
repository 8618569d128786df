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

#include "relax/extractors.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "relax/external_extractor.h"

namespace relax {

namespace {

std::vector<double> to_luma(const Image& image) {
  std::vector<double> gray(image.pixel_count());
  std::span<const float> d = image.data();
  if (image.channels() == 1) {
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = d[i];
  } else {
    for (std::size_t i = 0; i < gray.size(); ++i) {
      gray[i] = 0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2];
    }
  }
  return gray;
}

}  // namespace

std::vector<Embedding> Extractor::extract_batch(
    std::span<const Image> images) const {
  std::vector<Embedding> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    try {
      out[i] = extract(images[i]);
    } catch (const Error& e) {
      throw ExtractorError(e.what(), i);
    }
  });
  return out;
}

void HogParams::validate() const {
  if (cell < 1 || block < 1 || bins < 1) {
    throw InvalidArgument("HOG cell, block and bins must be at least 1");
  }
  if (!(norm_eps > 0.0)) throw InvalidArgument("HOG norm_eps must be positive");
}

std::size_t hog_dimension(int height, int width, const HogParams& params) {
  params.validate();
  const int cells_y = height / params.cell;
  const int cells_x = width / params.cell;
  if (cells_y < params.block || cells_x < params.block) return 0;
  return static_cast<std::size_t>(cells_y - params.block + 1) *
         static_cast<std::size_t>(cells_x - params.block + 1) *
         static_cast<std::size_t>(params.block * params.block * params.bins);
}

Embedding hog_descriptor(const Image& image, const HogParams& params) {
  params.validate();
  const int h = image.height();
  const int w = image.width();
  const int min_side = std::max(2 * params.cell, params.block * params.cell);
  if (h < min_side || w < min_side) {
    throw InvalidArgument("image " + std::to_string(h) + "x" +
                          std::to_string(w) + " is too small for HOG (need " +
                          std::to_string(min_side) + " pixels per side)");
  }
  const std::vector<double> gray = to_luma(image);
  auto px = [&](int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return gray[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                static_cast<std::size_t>(x)];
  };

  const int cells_y = h / params.cell;
  const int cells_x = w / params.cell;
  const int bins = params.bins;
  const double span = params.signed_orientation ? 2.0 * std::numbers::pi
                                                : std::numbers::pi;
  const double bin_width = span / bins;

  std::vector<double> hist(static_cast<std::size_t>(cells_y) *
                               static_cast<std::size_t>(cells_x) *
                               static_cast<std::size_t>(bins),
                           0.0);
  for (int y = 0; y < cells_y * params.cell; ++y) {
    const int cy = y / params.cell;
    for (int x = 0; x < cells_x * params.cell; ++x) {
      const double gx = px(y, x + 1) - px(y, x - 1);
      const double gy = px(y + 1, x) - px(y - 1, x);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      angle = std::fmod(angle + 2.0 * std::numbers::pi, span);
      const double pos = angle / bin_width;
      int lo = static_cast<int>(std::floor(pos));
      const double frac = pos - lo;
      lo %= bins;
      const int hi = (lo + 1) % bins;
      double* cell_hist =
          &hist[(static_cast<std::size_t>(cy) * static_cast<std::size_t>(cells_x) +
                 static_cast<std::size_t>(x / params.cell)) *
                static_cast<std::size_t>(bins)];
      cell_hist[lo] += mag * (1.0 - frac);
      cell_hist[hi] += mag * frac;
    }
  }

  const int blocks_y = cells_y - params.block + 1;
  const int blocks_x = cells_x - params.block + 1;
  const std::size_t block_len =
      static_cast<std::size_t>(params.block * params.block * bins);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(blocks_y * blocks_x) * block_len);
  const double eps2 = params.norm_eps * params.norm_eps;
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      const std::size_t start = out.size();
      for (int cy = by; cy < by + params.block; ++cy) {
        for (int cx = bx; cx < bx + params.block; ++cx) {
          const double* cell_hist =
              &hist[(static_cast<std::size_t>(cy) *
                         static_cast<std::size_t>(cells_x) +
                     static_cast<std::size_t>(cx)) *
                    static_cast<std::size_t>(bins)];
          out.insert(out.end(), cell_hist, cell_hist + bins);
        }
      }
      double sq = 0.0;
      for (std::size_t i = start; i < out.size(); ++i) sq += out[i] * out[i];
      const double scale = 1.0 / std::sqrt(sq + eps2);
      for (std::size_t i = start; i < out.size(); ++i) out[i] *= scale;
    }
  }
  return Embedding(std::move(out));
}

HogExtractor::HogExtractor(HogParams params) : params_(params) {
  params_.validate();
}

Embedding HogExtractor::extract(const Image& image) const {
  return hog_descriptor(image, params_);
}

std::string HogExtractor::describe() const {
  std::ostringstream os;
  os << "extractor=hog;cell=" << params_.cell << ";block=" << params_.block
     << ";bins=" << params_.bins
     << ";signed=" << (params_.signed_orientation ? 1 : 0) << ";eps=";
  os.precision(17);
  os << params_.norm_eps;
  return os.str();
}

DownsampleFlatten::DownsampleFlatten(int pool_h, int pool_w)
    : pool_h_(pool_h), pool_w_(pool_w) {
  if (pool_h < 1 || pool_w < 1) {
    throw InvalidArgument("pool size must be positive");
  }
}

Embedding DownsampleFlatten::extract(const Image& image) const {
  const int h = image.height();
  const int w = image.width();
  if (pool_h_ > h || pool_w_ > w) {
    throw InvalidArgument("pool grid " + std::to_string(pool_h_) + "x" +
                          std::to_string(pool_w_) + " exceeds image " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
  const int channels = image.channels();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(channels * pool_h_ * pool_w_));
  for (int c = 0; c < channels; ++c) {
    for (int py = 0; py < pool_h_; ++py) {
      const int y0 = py * h / pool_h_;
      const int y1 = (py + 1) * h / pool_h_;
      for (int px = 0; px < pool_w_; ++px) {
        const int x0 = px * w / pool_w_;
        const int x1 = (px + 1) * w / pool_w_;
        double sum = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) sum += image.at(y, x, c);
        }
        out.push_back(sum / static_cast<double>((y1 - y0) * (x1 - x0)));
      }
    }
  }
  return Embedding(std::move(out));
}

std::string DownsampleFlatten::describe() const {
  return "extractor=downsample;pool=" + std::to_string(pool_h_) + "x" +
         std::to_string(pool_w_);
}

std::vector<double> flatten_chw(const Image& image) {
  std::vector<double> x;
  x.reserve(image.data().size());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int xx = 0; xx < image.width(); ++xx) x.push_back(image.at(y, xx, c));
    }
  }
  return x;
}

LinearProjection::LinearProjection(int dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 1) throw InvalidArgument("projection dim must be positive");
}

std::shared_ptr<const std::vector<double>> LinearProjection::matrix(
    int height, int width, int channels) const {
  const auto key = std::make_tuple(height, width, channels);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const std::size_t n = static_cast<std::size_t>(height) *
                        static_cast<std::size_t>(width) *
                        static_cast<std::size_t>(channels);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
  auto m = std::make_shared<std::vector<double>>(static_cast<std::size_t>(dim_) * n);
  Rng rng(RngSpec{seed_, 0});
  for (double& v : *m) v = rng.normal(0.0, stddev);
  cache_.emplace(key, m);
  return m;
}

Embedding LinearProjection::extract(const Image& image) const {
  const std::vector<double> x = flatten_chw(image);
  const auto m = matrix(image.height(), image.width(), image.channels());
  std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
  for (std::size_t d = 0; d < out.size(); ++d) {
    const double* row = m->data() + d * x.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) sum += row[k] * x[k];
    out[d] = sum;
  }
  return Embedding(std::move(out));
}

std::string LinearProjection::describe() const {
  return "extractor=projection;dim=" + std::to_string(dim_) +
         ";seed=" + std::to_string(seed_);
}

ExtractorVariant parse_extractor_variant(const std::string& name) {
  if (name == "hog") return ExtractorVariant::kHog;
  if (name == "downsample") return ExtractorVariant::kDownsampleFlatten;
  if (name == "projection") return ExtractorVariant::kLinearProjection;
  if (name == "external") return ExtractorVariant::kExternal;
  throw InvalidArgument("unknown extractor '" + name +
                        "' (valid: hog, downsample, projection, external)");
}

std::unique_ptr<Extractor> make_extractor(const ExtractorSpec& spec) {
  switch (spec.variant) {
    case ExtractorVariant::kHog:
      return std::make_unique<HogExtractor>(spec.hog);
    case ExtractorVariant::kDownsampleFlatten:
      return std::make_unique<DownsampleFlatten>(spec.pool_h, spec.pool_w);
    case ExtractorVariant::kLinearProjection:
      return std::make_unique<LinearProjection>(spec.proj_dim, spec.proj_seed);
    case ExtractorVariant::kExternal:
      return std::make_unique<ExternalExtractor>(spec.external);
  }
  throw InvalidArgument("unknown extractor variant");
}

}  // namespace relax
