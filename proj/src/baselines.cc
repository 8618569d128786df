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

#include "relax/baselines.h"

#include <algorithm>
#include <cmath>

namespace relax {

namespace {

double mean_coordinate(const Embedding& e) {
  double sum = 0.0;
  for (double v : e.values()) sum += v;
  return sum / static_cast<double>(e.dim());
}

Grid analytic_saliency(const Image& image, const LinearProjection& projection) {
  const int h = image.height();
  const int w = image.width();
  const int c = image.channels();
  const auto matrix = projection.matrix(h, w, c);
  const std::size_t n = static_cast<std::size_t>(h) * w * c;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int dim = projection.dim();
  Grid out(h, w);
  for (std::size_t p = 0; p < plane; ++p) {
    double sum = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t col = static_cast<std::size_t>(ch) * plane + p;
      for (int d = 0; d < dim; ++d) {
        sum += (*matrix)[static_cast<std::size_t>(d) * n + col];
      }
    }
    out[p] = sum / dim / c;
  }
  return out;
}

// Mean over channels of the central difference of g at pixel p. Steps are
// clamped to [0, 1] (one-sided at the boundary) and divided by the step
// representable in float, so linear extractors are differentiated without
// truncation error.
double fd_derivative(const Image& image, const Extractor& extractor,
                     std::size_t p, double step) {
  const int c = image.channels();
  Image plus = image;
  Image minus = image;
  double sum = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    const std::size_t i = p * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch);
    const float v = image.data()[i];
    const float hi = static_cast<float>(std::min(1.0, v + step));
    const float lo = static_cast<float>(std::max(0.0, v - step));
    if (hi == lo) throw InvalidArgument("fd_step is below float resolution");
    plus.mutable_data()[i] = hi;
    minus.mutable_data()[i] = lo;
    sum += (mean_coordinate(extractor.extract(plus)) -
            mean_coordinate(extractor.extract(minus))) /
           (static_cast<double>(hi) - static_cast<double>(lo));
    plus.mutable_data()[i] = v;
    minus.mutable_data()[i] = v;
  }
  return sum / c;
}

}  // namespace

void SaliencySpec::validate() const {
  if (!(fd_step > 0.0) || !std::isfinite(fd_step)) {
    throw InvalidArgument("fd_step must be positive");
  }
  if (smoothgrad) {
    if (smoothgrad->samples < 1) throw InvalidArgument("smoothgrad samples must be >= 1");
    if (!(smoothgrad->sigma >= 0.0) || !std::isfinite(smoothgrad->sigma)) {
      throw InvalidArgument("smoothgrad sigma must be >= 0");
    }
  }
}

Grid saliency(const Image& image, const Extractor& extractor,
              const SaliencySpec& spec) {
  spec.validate();
  if (spec.mode == GradientMode::kAnalytic) {
    const auto* projection = dynamic_cast<const LinearProjection*>(&extractor);
    if (projection == nullptr) {
      throw InvalidArgument("analytic saliency needs a linear projection extractor");
    }
    return analytic_saliency(image, *projection);
  }
  if (image.pixel_count() > kMaxFiniteDifferencePixels) {
    throw InvalidArgument("finite-difference saliency is limited to " +
                          std::to_string(kMaxFiniteDifferencePixels) +
                          " pixels; got " + std::to_string(image.pixel_count()));
  }
  Grid out(image.height(), image.width());
  parallel_for(image.pixel_count(), [&](std::size_t p) {
    out[p] = fd_derivative(image, extractor, p, spec.fd_step);
  });
  return out;
}

Grid smoothgrad(const Image& image, const Extractor& extractor,
                const SaliencySpec& spec) {
  spec.validate();
  const SmoothGradParams params = spec.smoothgrad.value_or(SmoothGradParams{});
  Grid mean;
  for (int m = 0; m < params.samples; ++m) {
    Image noisy = image;
    if (params.sigma > 0.0) {
      Rng rng(params.rng, static_cast<std::uint64_t>(m));
      for (float& v : noisy.mutable_data()) {
        v = static_cast<float>(std::clamp(v + rng.normal(0.0, params.sigma), 0.0, 1.0));
      }
    }
    const Grid s = saliency(noisy, extractor, spec);
    if (m == 0) {
      mean = s;
      continue;
    }
    // Running mean: identical samples leave the mean bitwise unchanged.
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean[i] += (s[i] - mean[i]) / (m + 1);
    }
  }
  return mean;
}

}  // namespace relax
