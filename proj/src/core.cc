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

#include "relax/core.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace relax {

namespace {

void check_dims(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw InvalidArgument("grid dimensions must be positive, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
}

std::size_t area(int height, int width) {
  return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
}

}  // namespace

Grid::Grid(int height, int width, double fill)
    : height_(height), width_(width) {
  check_dims(height, width);
  values_.assign(area(height, width), fill);
}

Grid::Grid(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width);
  if (values_.size() != area(height, width)) {
    throw InvalidArgument("grid data length " + std::to_string(values_.size()) +
                          " does not match " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
}

Image::Image(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width);
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("image channels must be 1 or 3, got " +
                          std::to_string(channels));
  }
  data_.assign(area(height, width) * static_cast<std::size_t>(channels), 0.0f);
}

Image::Image(int height, int width, int channels, std::vector<float> data)
    : Image(height, width, channels) {
  if (data.size() != data_.size()) {
    throw InvalidArgument("image data length " + std::to_string(data.size()) +
                          " does not match " + std::to_string(height) + "x" +
                          std::to_string(width) + "x" +
                          std::to_string(channels));
  }
  data_ = std::move(data);
  validate();
}

void Image::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    // Negated comparison also rejects NaN.
    if (!(data_[i] >= 0.0f && data_[i] <= 1.0f)) {
      throw InvalidArgument("image intensity at offset " + std::to_string(i) +
                            " is outside [0, 1]");
    }
  }
}

Mask::Mask(Grid grid) : grid_(std::move(grid)) {
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!(grid_[i] >= 0.0 && grid_[i] <= 1.0)) {
      throw InvalidArgument("mask element at offset " + std::to_string(i) +
                            " is outside [0, 1]");
    }
  }
}

Mask Mask::ones(int height, int width) { return Mask(Grid(height, width, 1.0)); }

Mask Mask::zeros(int height, int width) {
  return Mask(Grid(height, width, 0.0));
}

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidArgument("embedding must be non-empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvalidArgument("embedding value " + std::to_string(i) +
                            " is not finite");
    }
  }
}

Rng::Rng(RngSpec spec, std::uint64_t index) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(spec.seed & 0xffffffffu),
      static_cast<std::uint32_t>(spec.seed >> 32),
      spec.stream_id,
      static_cast<std::uint32_t>(index & 0xffffffffu),
      static_cast<std::uint32_t>(index >> 32),
  };
  engine_.seed(seq);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw InvalidArgument("uniform_int: empty range");
  const std::uint64_t range =
      static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(engine_());  // full range
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return lo + static_cast<std::int64_t>(x % range);
}

double Rng::normal(double mean, double stddev) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t worker_count() {
  if (const char* env = std::getenv("RELAX_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value > 0) return static_cast<std::size_t>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {
// Set on threads running a parallel_for body; nested loops run inline.
thread_local bool in_parallel_region = false;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = in_parallel_region ? 1 : std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto run = [&](std::size_t w) {
    in_parallel_region = true;
    struct Reset {
      ~Reset() { in_parallel_region = false; }
    } reset;
    for (std::size_t i = w; i < n; i += workers) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run, w);
  run(0);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[hash & 0xf];
    hash >>= 4;
  }
  return out;
}

}  // namespace relax
