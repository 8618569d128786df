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

#include <gtest/gtest.h>

namespace relax {
namespace {

Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  Rng rng({seed, 3});
  for (float& v : img.mutable_data()) v = static_cast<float>(rng.uniform());
  return img;
}

// g(X) = sum of squared intensities, as a one-dimensional embedding.
class SquareSum : public Extractor {
 public:
  Embedding extract(const Image& image) const override {
    double sum = 0.0;
    for (float v : image.data()) sum += static_cast<double>(v) * v;
    return Embedding({sum});
  }
  std::string describe() const override { return "square-sum"; }
};

class ConstantExtractor : public Extractor {
 public:
  Embedding extract(const Image&) const override { return Embedding({0.5, 1.5}); }
  std::string describe() const override { return "constant"; }
};

TEST(SaliencyTest, AnalyticIsColumnMean) {
  const LinearProjection proj(6, 11);
  const Image img = random_image(4, 5, 3, 1);
  SaliencySpec spec;
  spec.mode = GradientMode::kAnalytic;
  const Grid s = saliency(img, proj, spec);
  const auto matrix = proj.matrix(4, 5, 3);
  const std::size_t n = 4 * 5 * 3;
  for (std::size_t p = 0; p < 20; ++p) {
    double sum = 0.0;
    for (std::size_t d = 0; d < 6; ++d) {
      for (std::size_t c = 0; c < 3; ++c) sum += (*matrix)[d * n + c * 20 + p];
    }
    EXPECT_NEAR(s[p], sum / 18.0, 1e-15);
  }
}

TEST(SaliencyTest, AnalyticRequiresProjection) {
  SaliencySpec spec;
  spec.mode = GradientMode::kAnalytic;
  EXPECT_THROW(saliency(random_image(4, 4, 1, 1), HogExtractor(), spec),
               InvalidArgument);
}

TEST(SaliencyTest, FiniteDifferenceMatchesAnalyticForProjection) {
  const LinearProjection proj(8, 3);
  SaliencySpec fd;
  SaliencySpec exact;
  exact.mode = GradientMode::kAnalytic;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Image img = random_image(16, 16, seed == 2 ? 3 : 1, seed);
    const Grid a = saliency(img, proj, fd);
    const Grid b = saliency(img, proj, exact);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-4);
  }
}

TEST(SaliencyTest, FiniteDifferenceOnQuadratic) {
  Image img = random_image(6, 6, 3, 5);
  img.at(0, 0, 0) = 0.0f;  // one-sided step at the lower boundary
  img.at(0, 1, 1) = 1.0f;  // and at the upper boundary
  const Grid s = saliency(img, SquareSum(), SaliencySpec{});
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      double expected = 0.0;
      for (int c = 0; c < 3; ++c) expected += 2.0 * img.at(y, x, c);
      expected /= 3.0;
      // Clamped pixels are differentiated one-sidedly: error is O(step).
      const double tol = (y == 0 && x < 2) ? 2e-3 : 1e-6;
      EXPECT_NEAR(s(y, x), expected, tol) << y << "," << x;
    }
  }
}

TEST(SaliencyTest, StepHalvingIsConsistent) {
  const Image img = random_image(16, 16, 1, 9);
  SaliencySpec a;
  SaliencySpec b;
  b.fd_step = a.fd_step / 2;
  const Grid ga = saliency(img, SquareSum(), a);
  const Grid gb = saliency(img, SquareSum(), b);
  for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_NEAR(ga[i], gb[i], 1e-5);
}

TEST(SaliencyTest, ConstantExtractorHasZeroGradient) {
  const Grid s = saliency(random_image(8, 8, 1, 2), ConstantExtractor(), SaliencySpec{});
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
}

TEST(SaliencyTest, RejectsLargeImagesAndBadSpecs) {
  EXPECT_THROW(saliency(Image(129, 128, 1), ConstantExtractor(), SaliencySpec{}),
               InvalidArgument);
  SaliencySpec bad;
  bad.fd_step = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad.fd_step = 1e-12;
  EXPECT_THROW(saliency(Image(2, 2, 1, std::vector<float>(4, 0.5f)), ConstantExtractor(), bad),
               InvalidArgument);
  SaliencySpec sg;
  sg.smoothgrad = SmoothGradParams{0, 0.1, {}};
  EXPECT_THROW(sg.validate(), InvalidArgument);
  sg.smoothgrad = SmoothGradParams{3, -0.1, {}};
  EXPECT_THROW(sg.validate(), InvalidArgument);
}

TEST(SmoothGradTest, ZeroSigmaEqualsSaliencyBitwise) {
  const LinearProjection proj(4, 1);
  const Image img = random_image(16, 16, 1, 4);
  SaliencySpec spec;
  spec.smoothgrad = SmoothGradParams{7, 0.0, {1, 0}};
  const Grid a = smoothgrad(img, proj, spec);
  const Grid b = saliency(img, proj, spec);
  EXPECT_EQ(a, b);
}

TEST(SmoothGradTest, DeterministicAndAveragesNoise) {
  const Image img = random_image(8, 8, 1, 4);
  SaliencySpec spec;
  spec.smoothgrad = SmoothGradParams{200, 0.05, {2, 0}};
  const Grid a = smoothgrad(img, SquareSum(), spec);
  const Grid b = smoothgrad(img, SquareSum(), spec);
  EXPECT_EQ(a, b);
  // The gradient 2x is linear, so the average of noisy gradients stays near
  // the clean one (clamping aside).
  const Grid clean = saliency(img, SquareSum(), SaliencySpec{});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], clean[i], 0.03);
}

}  // namespace
}  // namespace relax
