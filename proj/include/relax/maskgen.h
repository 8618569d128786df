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

// Random occlusion masks and their application to images.
//
// The default strategy draws a small binary grid of Bernoulli(p) cells,
// upsamples it bilinearly onto a canvas one cell larger than the image and
// crops the image-sized window at a random offset. This yields smooth masks
// that cover varied portions of the image with a small sample space.

#ifndef RELAX_MASKGEN_H_
#define RELAX_MASKGEN_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "relax/core.h"

namespace relax {

enum class MaskVariant {
  kRiseBilinear,
  kPerPixelBernoulli,
  kBlockDropout,
  // RiseBilinear masks; occluded pixels are filled with Gaussian noise drawn
  // from per-pixel corpus statistics instead of zeros.
  kRiseBilinearNoiseFill,
};

// How the noise term enters the noise-fill formula X*M (op) D*(1-M).
enum class NoiseSign {
  kSubtract,  // X*M - D*(1-M)
  kAdd,       // X*M + D*(1-M)
};

struct MaskStrategy {
  MaskVariant variant = MaskVariant::kRiseBilinear;
  // Coarse grid size for the bilinear variants.
  int grid_h = 7;
  int grid_w = 7;
  // Keep probability. BlockDropout drops seeds with probability 1 - p and
  // accepts p = 1 (no seeds).
  double p = 0.5;
  // Block side length for BlockDropout.
  int block = 7;
  // Per-pixel noise statistics for kRiseBilinearNoiseFill (H x W each).
  std::shared_ptr<const Grid> fill_mean;
  std::shared_ptr<const Grid> fill_std;
  NoiseSign noise_sign = NoiseSign::kSubtract;

  // Checks the strategy against an H x W image; throws InvalidArgument.
  void validate(int height, int width) const;
  // Canonical text form, used in explanation digests.
  std::string describe() const;
};

struct MaskBatchSpec {
  int n_masks = 3000;
  MaskStrategy strategy;
  // Masks use stream `rng.stream_id`; noise-fill draws use stream_id + 1.
  RngSpec rng;
};

const char* to_string(MaskVariant variant);
// Accepts "rise", "pixel", "block" and "noisefill"; throws InvalidArgument.
MaskVariant parse_mask_variant(const std::string& name);

// Upsampling geometry of a bilinear mask for an H x W image.
struct RiseGeometry {
  int cell_h = 0;  // floor(H / h)
  int cell_w = 0;  // floor(W / w)
  int canvas_h = 0;  // (h + 1) * cell_h
  int canvas_w = 0;  // (w + 1) * cell_w
};

// Throws InvalidArgument unless 1 <= h < H, 1 <= w < W and the canvas covers
// the image.
RiseGeometry rise_geometry(int grid_h, int grid_w, int height, int width);

// Bilinear upsampling of `coarse` onto a canvas_h x canvas_w canvas.
//
// Convention: the coarse value at (a, b) sits at the centre of its cell, i.e.
// at canvas coordinate ((a + 0.5) * canvas_h / h - 0.5, ...); canvas pixels
// outside the span of the lattice take the nearest edge value (replicate
// padding). Each output is a tensor product of hat-function weights.
Grid bilinear_upsample(const Grid& coarse, int canvas_h, int canvas_w);

// One bilinear mask. Crop offsets are uniform over every position where the
// image-sized window fits inside the canvas.
Mask rise_mask(const MaskStrategy& strategy, Rng& rng, int height, int width);

// The uncropped canvas for a given coarse draw; exposed for tests.
Grid rise_canvas(const Grid& coarse, int height, int width);

// Per-pixel iid Bernoulli(p) mask.
Mask pixel_dropout_mask(const MaskStrategy& strategy, Rng& rng, int height,
                        int width);

// DropBlock-style mask: seeds are drawn iid Bernoulli(1 - p) and each zeroes
// a block x block square around it, clipped at the borders.
Mask block_dropout_mask(const MaskStrategy& strategy, Rng& rng, int height,
                        int width);

// Deterministic part of block_dropout_mask: `seeds` is an H x W grid with
// nonzero entries at seed pixels. A square of even side extends one pixel
// further towards the bottom-right.
Mask block_dropout_from_seeds(const Grid& seeds, int block);

// Dispatches on strategy.variant.
Mask generate_mask(const MaskStrategy& strategy, Rng& rng, int height,
                   int width);

// Zero-fill variants return X*M broadcast over channels. The noise-fill
// variant draws D ~ Normal(fill_mean, fill_std) per pixel from `noise_rng`
// (required in that case), combines per `noise_sign` and clamps to [0, 1].
Image apply_mask(const Image& image, const Mask& mask,
                 const MaskStrategy& strategy, Rng* noise_rng = nullptr);

// An indexed, replayable sequence of masks together with the rule for
// applying them. Implementations must be safe to call concurrently.
class MaskSequence {
 public:
  virtual ~MaskSequence() = default;
  virtual std::size_t size() const = 0;
  virtual int height() const = 0;
  virtual int width() const = 0;
  virtual Mask mask(std::size_t index) const = 0;
  virtual Image apply(const Image& image, const Mask& mask,
                      std::size_t index) const = 0;
  virtual std::string describe() const = 0;
};

// Masks drawn from a MaskBatchSpec; mask n uses its own stream derived from
// (seed, stream_id, n), so the sequence is independent of evaluation order.
class SeededMaskSequence : public MaskSequence {
 public:
  SeededMaskSequence(MaskBatchSpec spec, int height, int width);

  std::size_t size() const override {
    return static_cast<std::size_t>(spec_.n_masks);
  }
  int height() const override { return height_; }
  int width() const override { return width_; }
  Mask mask(std::size_t index) const override;
  Image apply(const Image& image, const Mask& mask,
              std::size_t index) const override;
  std::string describe() const override;

  const MaskBatchSpec& spec() const { return spec_; }

 private:
  MaskBatchSpec spec_;
  int height_;
  int width_;
};

// A fixed list of masks applied with zero fill.
class ExplicitMaskSequence : public MaskSequence {
 public:
  explicit ExplicitMaskSequence(std::vector<Mask> masks);

  std::size_t size() const override { return masks_.size(); }
  int height() const override { return masks_.front().height(); }
  int width() const override { return masks_.front().width(); }
  Mask mask(std::size_t index) const override { return masks_.at(index); }
  Image apply(const Image& image, const Mask& mask,
              std::size_t index) const override;
  std::string describe() const override;

 private:
  std::vector<Mask> masks_;
};

}  // namespace relax

#endif  // RELAX_MASKGEN_H_
