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

#include "relax/maskgen.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace relax {

namespace {

// Source coordinate and interpolation weight for one output row/column.
struct Tap {
  int lo;
  int hi;
  double frac;
};

Tap tap(int out, int out_size, int in_size) {
  double src = (out + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
  const int lo = static_cast<int>(std::floor(src));
  const int hi = std::min(lo + 1, in_size - 1);
  return {lo, hi, src - lo};
}

double interpolate(const Grid& coarse, const Tap& ty, const Tap& tx) {
  const double top = coarse(ty.lo, tx.lo) * (1.0 - tx.frac) +
                     coarse(ty.lo, tx.hi) * tx.frac;
  const double bottom = coarse(ty.hi, tx.lo) * (1.0 - tx.frac) +
                        coarse(ty.hi, tx.hi) * tx.frac;
  return top * (1.0 - ty.frac) + bottom * ty.frac;
}

Grid draw_coarse(const MaskStrategy& strategy, Rng& rng) {
  Grid coarse(strategy.grid_h, strategy.grid_w);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    coarse[i] = rng.bernoulli(strategy.p) ? 1.0 : 0.0;
  }
  return coarse;
}

bool is_bilinear(MaskVariant v) {
  return v == MaskVariant::kRiseBilinear ||
         v == MaskVariant::kRiseBilinearNoiseFill;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(MaskVariant variant) {
  switch (variant) {
    case MaskVariant::kRiseBilinear:
      return "rise";
    case MaskVariant::kPerPixelBernoulli:
      return "pixel";
    case MaskVariant::kBlockDropout:
      return "block";
    case MaskVariant::kRiseBilinearNoiseFill:
      return "noisefill";
  }
  return "unknown";
}

MaskVariant parse_mask_variant(const std::string& name) {
  if (name == "rise") return MaskVariant::kRiseBilinear;
  if (name == "pixel") return MaskVariant::kPerPixelBernoulli;
  if (name == "block") return MaskVariant::kBlockDropout;
  if (name == "noisefill") return MaskVariant::kRiseBilinearNoiseFill;
  throw InvalidArgument("unknown mask strategy '" + name +
                        "' (valid: rise, pixel, block, noisefill)");
}

void MaskStrategy::validate(int height, int width) const {
  if (variant == MaskVariant::kBlockDropout) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw InvalidArgument("block dropout keep probability must be in (0, 1]");
    }
    if (block < 1 || block > std::min(height, width)) {
      throw InvalidArgument("block size " + std::to_string(block) +
                            " must be in [1, min(H, W)]");
    }
    return;
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidArgument("keep probability p must be in (0, 1)");
  }
  if (is_bilinear(variant)) rise_geometry(grid_h, grid_w, height, width);
  if (variant == MaskVariant::kRiseBilinearNoiseFill) {
    if (!fill_mean || !fill_std) {
      throw InvalidArgument("noise fill requires fill_mean and fill_std grids");
    }
    if (fill_mean->height() != height || fill_mean->width() != width ||
        !fill_mean->same_shape(*fill_std)) {
      throw InvalidArgument("noise fill statistics must be " +
                            std::to_string(height) + "x" +
                            std::to_string(width));
    }
    for (double s : fill_std->values()) {
      if (!(s >= 0.0)) throw InvalidArgument("fill_std must be non-negative");
    }
  }
}

std::string MaskStrategy::describe() const {
  std::string out = std::string("mask=") + to_string(variant);
  switch (variant) {
    case MaskVariant::kRiseBilinear:
    case MaskVariant::kRiseBilinearNoiseFill:
      out += ";h=" + std::to_string(grid_h) + ";w=" + std::to_string(grid_w);
      break;
    case MaskVariant::kBlockDropout:
      out += ";block=" + std::to_string(block);
      break;
    case MaskVariant::kPerPixelBernoulli:
      break;
  }
  out += ";p=" + format_real(p);
  if (variant == MaskVariant::kRiseBilinearNoiseFill) {
    out += noise_sign == NoiseSign::kSubtract ? ";fill=subtract" : ";fill=add";
    std::string stats;
    for (double v : fill_mean->values()) stats += format_real(v) + ",";
    for (double v : fill_std->values()) stats += format_real(v) + ",";
    out += ";stats=" + fnv1a_hex(stats);
  }
  return out;
}

RiseGeometry rise_geometry(int grid_h, int grid_w, int height, int width) {
  if (grid_h < 1 || grid_w < 1 || grid_h >= height || grid_w >= width) {
    throw InvalidArgument("coarse grid " + std::to_string(grid_h) + "x" +
                          std::to_string(grid_w) +
                          " must be smaller than the image " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  RiseGeometry g;
  g.cell_h = height / grid_h;
  g.cell_w = width / grid_w;
  g.canvas_h = (grid_h + 1) * g.cell_h;
  g.canvas_w = (grid_w + 1) * g.cell_w;
  if (g.canvas_h < height || g.canvas_w < width) {
    throw InvalidArgument("upsampled canvas " + std::to_string(g.canvas_h) +
                          "x" + std::to_string(g.canvas_w) +
                          " does not cover the image; choose a smaller grid");
  }
  return g;
}

Grid bilinear_upsample(const Grid& coarse, int canvas_h, int canvas_w) {
  Grid out(canvas_h, canvas_w);
  std::vector<Tap> cols(static_cast<std::size_t>(canvas_w));
  for (int x = 0; x < canvas_w; ++x) {
    cols[static_cast<std::size_t>(x)] = tap(x, canvas_w, coarse.width());
  }
  for (int y = 0; y < canvas_h; ++y) {
    const Tap ty = tap(y, canvas_h, coarse.height());
    for (int x = 0; x < canvas_w; ++x) {
      out(y, x) = interpolate(coarse, ty, cols[static_cast<std::size_t>(x)]);
    }
  }
  return out;
}

Grid rise_canvas(const Grid& coarse, int height, int width) {
  const RiseGeometry g =
      rise_geometry(coarse.height(), coarse.width(), height, width);
  return bilinear_upsample(coarse, g.canvas_h, g.canvas_w);
}

Mask rise_mask(const MaskStrategy& strategy, Rng& rng, int height, int width) {
  const RiseGeometry g =
      rise_geometry(strategy.grid_h, strategy.grid_w, height, width);
  const Grid coarse = draw_coarse(strategy, rng);
  const int off_y = static_cast<int>(rng.uniform_int(0, g.canvas_h - height));
  const int off_x = static_cast<int>(rng.uniform_int(0, g.canvas_w - width));

  // Only the cropped window of the canvas is evaluated.
  std::vector<Tap> cols(static_cast<std::size_t>(width));
  for (int x = 0; x < width; ++x) {
    cols[static_cast<std::size_t>(x)] =
        tap(x + off_x, g.canvas_w, strategy.grid_w);
  }
  Grid out(height, width);
  for (int y = 0; y < height; ++y) {
    const Tap ty = tap(y + off_y, g.canvas_h, strategy.grid_h);
    for (int x = 0; x < width; ++x) {
      out(y, x) = interpolate(coarse, ty, cols[static_cast<std::size_t>(x)]);
    }
  }
  return Mask(std::move(out));
}

Mask pixel_dropout_mask(const MaskStrategy& strategy, Rng& rng, int height,
                        int width) {
  Grid out(height, width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = rng.bernoulli(strategy.p) ? 1.0 : 0.0;
  }
  return Mask(std::move(out));
}

Mask block_dropout_from_seeds(const Grid& seeds, int block) {
  const int height = seeds.height();
  const int width = seeds.width();
  if (block < 1 || block > std::min(height, width)) {
    throw InvalidArgument("block size " + std::to_string(block) +
                          " must be in [1, min(H, W)]");
  }
  const int before = (block - 1) / 2;
  Grid out(height, width, 1.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (seeds(y, x) == 0.0) continue;
      const int y0 = std::max(0, y - before);
      const int y1 = std::min(height, y - before + block);
      const int x0 = std::max(0, x - before);
      const int x1 = std::min(width, x - before + block);
      for (int yy = y0; yy < y1; ++yy) {
        for (int xx = x0; xx < x1; ++xx) out(yy, xx) = 0.0;
      }
    }
  }
  return Mask(std::move(out));
}

Mask block_dropout_mask(const MaskStrategy& strategy, Rng& rng, int height,
                        int width) {
  if (strategy.block < 1 || strategy.block > std::min(height, width)) {
    throw InvalidArgument("block size " + std::to_string(strategy.block) +
                          " must be in [1, min(H, W)]");
  }
  Grid seeds(height, width);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    seeds[i] = rng.bernoulli(1.0 - strategy.p) ? 1.0 : 0.0;
  }
  return block_dropout_from_seeds(seeds, strategy.block);
}

Mask generate_mask(const MaskStrategy& strategy, Rng& rng, int height,
                   int width) {
  switch (strategy.variant) {
    case MaskVariant::kRiseBilinear:
    case MaskVariant::kRiseBilinearNoiseFill:
      return rise_mask(strategy, rng, height, width);
    case MaskVariant::kPerPixelBernoulli:
      return pixel_dropout_mask(strategy, rng, height, width);
    case MaskVariant::kBlockDropout:
      return block_dropout_mask(strategy, rng, height, width);
  }
  throw InvalidArgument("unknown mask variant");
}

Image apply_mask(const Image& image, const Mask& mask,
                 const MaskStrategy& strategy, Rng* noise_rng) {
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw InvalidArgument(
        "mask " + std::to_string(mask.height()) + "x" +
        std::to_string(mask.width()) + " does not match image " +
        std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  const int channels = image.channels();
  Image out(image.height(), image.width(), channels);
  std::span<const float> in = image.data();
  std::span<float> dst = out.mutable_data();
  const std::size_t pixels = image.pixel_count();
  const auto c = static_cast<std::size_t>(channels);

  if (strategy.variant != MaskVariant::kRiseBilinearNoiseFill) {
    for (std::size_t i = 0; i < pixels; ++i) {
      const double m = mask[i];
      for (std::size_t k = 0; k < c; ++k) {
        dst[i * c + k] = static_cast<float>(in[i * c + k] * m);
      }
    }
    return out;
  }

  if (noise_rng == nullptr) {
    throw InvalidArgument("noise-fill masking requires a noise stream");
  }
  if (!strategy.fill_mean || !strategy.fill_std ||
      strategy.fill_mean->height() != image.height() ||
      strategy.fill_mean->width() != image.width() ||
      !strategy.fill_mean->same_shape(*strategy.fill_std)) {
    throw InvalidArgument("noise fill statistics do not match the image");
  }
  const double sign = strategy.noise_sign == NoiseSign::kSubtract ? -1.0 : 1.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    const double m = mask[i];
    // One draw per pixel, shared by all channels of that pixel.
    const double d =
        noise_rng->normal((*strategy.fill_mean)[i], (*strategy.fill_std)[i]);
    for (std::size_t k = 0; k < c; ++k) {
      const double v = in[i * c + k] * m + sign * d * (1.0 - m);
      dst[i * c + k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

SeededMaskSequence::SeededMaskSequence(MaskBatchSpec spec, int height,
                                       int width)
    : spec_(std::move(spec)), height_(height), width_(width) {
  if (spec_.n_masks < 1) throw InvalidArgument("n_masks must be at least 1");
  spec_.strategy.validate(height, width);
}

Mask SeededMaskSequence::mask(std::size_t index) const {
  Rng rng(spec_.rng, index);
  return generate_mask(spec_.strategy, rng, height_, width_);
}

Image SeededMaskSequence::apply(const Image& image, const Mask& mask,
                                std::size_t index) const {
  if (spec_.strategy.variant == MaskVariant::kRiseBilinearNoiseFill) {
    Rng noise(RngSpec{spec_.rng.seed, spec_.rng.stream_id + 1}, index);
    return apply_mask(image, mask, spec_.strategy, &noise);
  }
  return apply_mask(image, mask, spec_.strategy);
}

std::string SeededMaskSequence::describe() const {
  return spec_.strategy.describe() + ";n=" + std::to_string(spec_.n_masks);
}

ExplicitMaskSequence::ExplicitMaskSequence(std::vector<Mask> masks)
    : masks_(std::move(masks)) {
  if (masks_.empty()) throw InvalidArgument("mask list must be non-empty");
  for (const Mask& m : masks_) {
    if (m.height() != masks_.front().height() ||
        m.width() != masks_.front().width()) {
      throw InvalidArgument("all explicit masks must share one shape");
    }
  }
}

Image ExplicitMaskSequence::apply(const Image& image, const Mask& mask,
                                  std::size_t /*index*/) const {
  return apply_mask(image, mask, MaskStrategy{});
}

std::string ExplicitMaskSequence::describe() const {
  return "mask=explicit;n=" + std::to_string(masks_.size());
}

}  // namespace relax
