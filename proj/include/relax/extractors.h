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

#ifndef RELAX_EXTRACTORS_H_
#define RELAX_EXTRACTORS_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "relax/core.h"

namespace relax {

// Raised when an extractor cannot produce an embedding. `item` is the
// offending position within a batch when known.
class ExtractorError : public Error {
 public:
  explicit ExtractorError(const std::string& what,
                          std::optional<std::size_t> item = std::nullopt)
      : Error(what), item_(item) {}
  std::optional<std::size_t> item() const { return item_; }

 private:
  std::optional<std::size_t> item_;
};

// Image -> embedding map. Implementations must be deterministic and safe for
// concurrent calls.
class Extractor {
 public:
  virtual ~Extractor() = default;

  virtual Embedding extract(const Image& image) const = 0;

  // Default: evaluates extract() over the batch on worker threads. Errors
  // are rethrown as ExtractorError carrying the batch position.
  virtual std::vector<Embedding> extract_batch(
      std::span<const Image> images) const;

  // Canonical text form, used in explanation digests.
  virtual std::string describe() const = 0;
};

struct HogParams {
  int cell = 8;      // pixels per cell side
  int block = 2;     // cells per block side
  int bins = 9;      // orientation bins
  bool signed_orientation = false;  // [0, 360) instead of [0, 180)
  double norm_eps = 1e-6;

  void validate() const;
};

// Output length of hog_descriptor for an H x W image.
std::size_t hog_dimension(int height, int width, const HogParams& params);

// Histogram of oriented gradients.
//
// Colour images are converted to luma (0.299, 0.587, 0.114) first.
// Gradients are central differences [-1, 0, 1] with replicated borders.
// Orientation bin k is centred at k * 180/bins degrees (unsigned) and each
// pixel's magnitude is split linearly between the two nearest bin centres.
// Cells tile the top-left floor(H/cell) x floor(W/cell) region; overlapping
// block x block groups of cells at a stride of one cell are each normalised
// as v / sqrt(|v|^2 + eps^2) and concatenated in row-major block order.
Embedding hog_descriptor(const Image& image, const HogParams& params);

class HogExtractor : public Extractor {
 public:
  explicit HogExtractor(HogParams params = {});
  Embedding extract(const Image& image) const override;
  std::string describe() const override;
  const HogParams& params() const { return params_; }

 private:
  HogParams params_;
};

// Area-average pooling onto a pool_h x pool_w grid, flattened in
// channel-major (c, y, x) order. With pool = H x W this is the identity
// flatten, matching the (C, H, W) layout of the wire protocol.
class DownsampleFlatten : public Extractor {
 public:
  DownsampleFlatten(int pool_h, int pool_w);
  Embedding extract(const Image& image) const override;
  std::string describe() const override;

 private:
  int pool_h_;
  int pool_w_;
};

// f(X) = P x with x the (c, y, x)-ordered flattening of X and P a D x n
// matrix of iid Normal(0, 1/n) entries drawn from `seed`. The matrix for
// each input shape is generated once and cached.
class LinearProjection : public Extractor {
 public:
  LinearProjection(int dim, std::uint64_t seed);
  Embedding extract(const Image& image) const override;
  std::string describe() const override;

  int dim() const { return dim_; }
  // Row-major D x (C*H*W) matrix for the given input shape.
  std::shared_ptr<const std::vector<double>> matrix(int height, int width,
                                                    int channels) const;

 private:
  int dim_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  mutable std::map<std::tuple<int, int, int>,
                   std::shared_ptr<const std::vector<double>>>
      cache_;
};

// Returns the image flattened in (c, y, x) order.
std::vector<double> flatten_chw(const Image& image);

enum class ExtractorVariant { kHog, kDownsampleFlatten, kLinearProjection, kExternal };

struct ExternalOptions {
  // argv of the child process; argv[0] is resolved through PATH.
  std::vector<std::string> command;
  std::size_t batch_size = 32;
  std::chrono::milliseconds timeout{60000};
};

struct ExtractorSpec {
  ExtractorVariant variant = ExtractorVariant::kHog;
  HogParams hog;
  int pool_h = 8;
  int pool_w = 8;
  int proj_dim = 16;
  std::uint64_t proj_seed = 0;
  ExternalOptions external;
};

// Accepts "hog", "downsample", "projection" and "external".
ExtractorVariant parse_extractor_variant(const std::string& name);

std::unique_ptr<Extractor> make_extractor(const ExtractorSpec& spec);

inline Embedding extract(const ExtractorSpec& spec, const Image& image) {
  return make_extractor(spec)->extract(image);
}

}  // namespace relax

#endif  // RELAX_EXTRACTORS_H_
