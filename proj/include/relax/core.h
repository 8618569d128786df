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

#ifndef RELAX_CORE_H_
#define RELAX_CORE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relax {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A file or wire payload did not match its format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

// Row-major H x W grid of reals. Used for masks, heatmaps and corpus
// statistics.
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, double fill = 0.0);
  Grid(int height, int width, std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(int y, int x) const { return values_[index(y, x)]; }
  double& operator()(int y, int x) { return values_[index(y, x)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// H x W x C image with intensities in [0, 1], stored row-major with the
// channel index fastest: data[(y * W + x) * C + c].
class Image {
 public:
  Image() = default;
  // All-zero image.
  Image(int height, int width, int channels);
  // Takes ownership of `data`; throws InvalidArgument if the length or any
  // intensity is out of range.
  Image(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  float at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  float& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }

  std::span<const float> data() const { return data_; }
  // Mutable access for builders. Callers must keep intensities in [0, 1].
  std::span<float> mutable_data() { return data_; }

  // Throws InvalidArgument when an intensity lies outside [0, 1].
  void validate() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Stochastic occlusion pattern, every element in [0, 1].
class Mask {
 public:
  Mask() = default;
  // Throws InvalidArgument if any element lies outside [0, 1].
  explicit Mask(Grid grid);

  static Mask ones(int height, int width);
  static Mask zeros(int height, int width);

  int height() const { return grid_.height(); }
  int width() const { return grid_.width(); }
  std::size_t size() const { return grid_.size(); }
  double operator()(int y, int x) const { return grid_(y, x); }
  double operator[](std::size_t i) const { return grid_[i]; }
  std::span<const double> values() const { return grid_.values(); }
  const Grid& grid() const { return grid_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Grid grid_;
};

// Feature-extractor output. Non-empty, all values finite.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

// Sentinel stored in Explanation::uncertainty where the accumulated mask
// weight is at most one and the weighted variance is undefined.
inline constexpr double kUndefinedUncertainty = -1.0;

struct Explanation {
  Grid importance;
  Grid uncertainty;
  // Sum of mask values per pixel.
  Grid mask_weight;
  // Mask-weighted mean similarity per pixel (sum s*M / sum M). This is the
  // weighted Parzen estimate; `importance` equals it times mask_weight / N.
  Grid weighted_importance;
  int n_masks = 0;
  std::string config_digest;
  std::uint64_t seed = 0;
  // Masked embeddings whose norm was zero; their similarity was taken as 0.
  std::size_t zero_norm_count = 0;

  bool uncertainty_defined(std::size_t i) const {
    return uncertainty[i] != kUndefinedUncertainty;
  }
  int height() const { return importance.height(); }
  int width() const { return importance.width(); }
};

// Identifies one deterministic random stream.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint32_t stream_id = 0;
};

// Deterministic random stream.
//
// The engine is std::mt19937_64 seeded through std::seed_seq with the words
// (seed low, seed high, stream_id, index low, index high). Both algorithms
// are fully specified by the C++ standard, so sequences are identical on
// every conforming platform. Distributions are implemented here rather than
// through <random> distributions, whose algorithms are implementation
// defined.
class Rng {
 public:
  explicit Rng(RngSpec spec, std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [lo, hi], both inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  // Box-Muller; consumes two uniforms per call.
  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
};

inline Rng seeded_rng(RngSpec spec) { return Rng(spec); }

// Number of worker threads: RELAX_THREADS when set to a positive value,
// otherwise the hardware concurrency (at least 1).
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Exceptions
// thrown by fn are rethrown on the caller's thread (the one with the lowest
// index wins). Calls made from inside a running loop body execute serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace relax

#endif  // RELAX_CORE_H_
