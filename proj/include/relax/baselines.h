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

// Gradient baselines for representation explanations.
//
// Both explain the mean embedding coordinate g(X) = (1/D) sum_d f(X)_d,
// whose gradient is the mean of the per-coordinate gradients. Channel
// derivatives are averaged into a single H x W grid.

#ifndef RELAX_BASELINES_H_
#define RELAX_BASELINES_H_

#include <optional>

#include "relax/core.h"
#include "relax/extractors.h"

namespace relax {

enum class GradientMode {
  // Exact gradient; LinearProjection only.
  kAnalytic,
  // Central differences, two extractor calls per pixel and channel.
  kFiniteDifference,
};

struct SmoothGradParams {
  int samples = 25;
  double sigma = 0.1;
  RngSpec rng;
};

struct SaliencySpec {
  GradientMode mode = GradientMode::kFiniteDifference;
  double fd_step = 1e-3;
  std::optional<SmoothGradParams> smoothgrad;

  void validate() const;
};

// Largest H * W accepted in finite-difference mode.
inline constexpr std::size_t kMaxFiniteDifferencePixels = 16384;

Grid saliency(const Image& image, const Extractor& extractor,
              const SaliencySpec& spec);

// Mean of saliency over noisy copies of the image, each pixel perturbed by
// iid Normal(0, sigma^2) noise and clamped to [0, 1]. Copy m draws its noise
// from Rng(rng, m). Uses spec.smoothgrad, or the defaults when unset.
Grid smoothgrad(const Image& image, const Extractor& extractor,
                const SaliencySpec& spec);

}  // namespace relax

#endif  // RELAX_BASELINES_H_
