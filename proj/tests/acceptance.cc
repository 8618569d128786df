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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <gmp.h>
#include <mpfr.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "relax/baselines.h"
#include "relax/evalmetrics.h"
#include "relax/extractors.h"
#include "relax/maskgen.h"
#include "relax/netpbm.h"
#include "relax/relax_engine.h"
#include "relax/synthdata.h"
#include "relax/tensor_io.h"

namespace relax {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  Rng rng({seed, 77});
  for (float& v : img.mutable_data()) v = static_cast<float>(rng.uniform());
  return img;
}

// --- 1 ---------------------------------------------------------------------

std::int64_t mpfr_bound(const char* delta, const char* t) {
  mpfr_t d, tt, num, den;
  mpfr_inits2(256, d, tt, num, den, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_str(d, delta, 10, MPFR_RNDN);
  mpfr_set_str(tt, t, 10, MPFR_RNDN);
  mpfr_div_ui(num, d, 2, MPFR_RNDN);
  mpfr_log(num, num, MPFR_RNDN);
  mpfr_neg(num, num, MPFR_RNDN);
  mpfr_sqr(den, tt, MPFR_RNDN);
  mpfr_mul_ui(den, den, 2, MPFR_RNDN);
  mpfr_div(num, num, den, MPFR_RNDN);
  mpfr_ceil(num, num);
  const std::int64_t out = mpfr_get_si(num, MPFR_RNDN);
  mpfr_clears(d, tt, num, den, static_cast<mpfr_ptr>(nullptr));
  return out;
}

Outcome criterion1() {
  struct Case {
    const char* delta;
    const char* t;
    std::int64_t expected;
  };
  const Case cases[] = {{"0.01", "0.03", 2944}, {"0.02", "0.1", 231}, {"0.01", "0.01", 26492}};
  Outcome o{true, ""};
  for (const Case& c : cases) {
    const std::int64_t got = mask_count_bound({std::stod(c.delta), std::stod(c.t)});
    const std::int64_t oracle = mpfr_bound(c.delta, c.t);
    o.pass = o.pass && got == oracle && got == c.expected;
    o.detail += std::to_string(got) + "/" + std::to_string(oracle) + " ";
  }
  return o;
}

// --- 2 ---------------------------------------------------------------------

Outcome criterion2() {
  SceneSpec spec;
  spec.rng = {2, 0};
  const Scene scene = generate_scene(spec, 0);
  BoundRunConfig config;
  config.n_grid = {250, 500, 1000, 3000};
  config.n_repeats = 5;
  config.reference_n = 10000;
  config.reference_runs = 10;
  const auto rows = bound_verification_run(scene.image, HogExtractor(), config);
  const BoundCurveRow& last = rows.back();
  bool pass = last.n_masks == 3000 && last.errors.size() == 5;
  double worst = 0.0;
  for (double e : last.errors) worst = std::max(worst, e);
  pass = pass && worst <= 0.0297;
  std::string curve;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    curve += fmt("%.4f ", rows[i].mean_error);
    if (i > 0 && rows[i].mean_error > rows[i - 1].mean_error) pass = false;
  }
  return {pass, "max error at 3000 = " + fmt("%.4f", worst) + "; mean curve " + curve};
}

// --- 3, 4 ------------------------------------------------------------------

std::vector<Mask> random_masks(Rng& rng, int n, int h, int w) {
  std::vector<Mask> masks;
  for (int k = 0; k < n; ++k) {
    Grid g(h, w);
    for (double& v : g.values()) v = rng.uniform();
    masks.emplace_back(std::move(g));
  }
  return masks;
}

Outcome criterion3() {
  Rng rng({3, 0});
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 200));
    const int h = static_cast<int>(rng.uniform_int(2, 12));
    const int w = static_cast<int>(rng.uniform_int(2, 12));
    const auto masks = random_masks(rng, n, h, w);
    std::vector<double> s(static_cast<std::size_t>(n));
    for (double& v : s) v = 2.0 * rng.uniform() - 1.0;
    worst = std::max(worst, parzen_identity_check(s, masks));
  }
  return {worst <= 1e-9, fmt("max relative deviation %.3g", worst)};
}

Outcome criterion4() {
  Rng rng({4, 0});
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 100));
    const int h = static_cast<int>(rng.uniform_int(2, 10));
    const int w = static_cast<int>(rng.uniform_int(2, 10));
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(1, 32));
    const auto masks = random_masks(rng, n, h, w);
    auto vec = [&] {
      std::vector<double> v(d);
      for (double& x : v) x = rng.normal();
      return Embedding(std::move(v));
    };
    const Embedding ref = vec();
    std::vector<Embedding> hs;
    for (int k = 0; k < n; ++k) hs.push_back(vec());
    worst = std::max(worst, rkhs_identity_check(ref, hs, masks));
  }
  return {worst <= 1e-9, fmt("max relative deviation %.3g", worst)};
}

// --- 5, 6 ------------------------------------------------------------------

std::vector<Explanation> g_explanations;

Outcome criterion5() {
  const HogExtractor hog;
  double di = 0.0;
  double du = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Image img = random_image(32, 32, 1, k);
    MaskBatchSpec spec;
    spec.n_masks = 500;
    spec.strategy.grid_h = spec.strategy.grid_w = 4;
    spec.rng = {100 + k, 0};
    const Explanation a = relax_one_pass(img, hog, spec);
    const Explanation b = relax_two_pass(img, hog, spec);
    for (std::size_t i = 0; i < a.importance.size(); ++i) {
      di = std::max(di, std::abs(a.importance[i] - b.importance[i]));
      du = std::max(du, std::abs(a.uncertainty[i] - b.uncertainty[i]));
    }
    g_explanations.push_back(a);
  }
  return {di <= 1e-6 && du <= 1e-6,
          fmt("importance max diff %.3g, uncertainty max diff %.3g", di, du)};
}

Outcome criterion6() {
  bool pass = true;
  double lo_frac = 1.0;
  double hi_frac = 0.0;
  std::size_t checked = 0;
  for (const Explanation& e : g_explanations) {
    std::vector<double> defined;
    for (std::size_t i = 0; i < e.uncertainty.size(); ++i) {
      if (e.uncertainty_defined(i)) defined.push_back(e.uncertainty[i]);
    }
    std::sort(defined.begin(), defined.end());
    double mean = 0.0;
    for (double v : defined) mean += v;
    mean /= static_cast<double>(defined.size());
    const std::size_t m = defined.size();
    const double med = m % 2 == 1 ? defined[m / 2] : 0.5 * (defined[m / 2 - 1] + defined[m / 2]);
    for (auto agg : {UncertaintyAggregation::kMean, UncertaintyAggregation::kMedian}) {
      for (double gamma : {0.95, 0.99, 1.0}) {
        const double eps = gamma * (agg == UncertaintyAggregation::kMean ? mean : med);
        const UrelaxResult r = urelax_filter(e, {agg, gamma});
        std::size_t kept = 0;
        for (std::size_t i = 0; i < e.importance.size(); ++i) {
          const bool keep = e.uncertainty_defined(i) && e.uncertainty[i] < eps;
          const double expected = keep ? e.importance[i] : 0.0;
          if (r.importance[i] != expected || (keep && r.importance[i] == 0.0)) pass = false;
          kept += keep ? 1 : 0;
        }
        ++checked;
        if (agg == UncertaintyAggregation::kMedian && gamma == 1.0) {
          const double frac = static_cast<double>(kept) / static_cast<double>(m);
          lo_frac = std::min(lo_frac, frac);
          hi_frac = std::max(hi_frac, frac);
        }
      }
    }
  }
  pass = pass && checked == 120 && lo_frac >= 0.45 && hi_frac <= 0.55;
  return {pass, fmt("%g filter checks; median survival fraction in [%.4f, %.4f]",
                    static_cast<double>(checked), lo_frac, hi_frac)};
}

// --- 7 ---------------------------------------------------------------------

Outcome criterion7() {
  SceneSpec spec;
  spec.rng = {7, 0};
  std::vector<LabeledImage> corpus;
  for (Scene& s : generate_scenes(spec, 200)) {
    corpus.push_back({std::move(s.image), std::move(s.gt), s.label});
  }
  EvalConfig config;
  config.methods = {EvalMethod::kRelax, EvalMethod::kRandom};
  config.metrics = {EvalMetric::kPointing, EvalMetric::kTopk, EvalMetric::kRank};
  config.n_masks = 3000;
  config.relax_map = RelaxMap::kWeighted;
  config.repeats = 3;
  config.seed = 1;
  const ScoreTable t = evaluate_corpus(corpus, HogExtractor(), config);
  const double pointing = t.find(EvalMethod::kRelax, EvalMetric::kPointing).mean;
  const double rank = t.find(EvalMethod::kRelax, EvalMetric::kRank).mean;
  const double rank_random = t.find(EvalMethod::kRandom, EvalMetric::kRank).mean;
  bool beats = true;
  for (auto metric : config.metrics) {
    beats = beats && t.find(EvalMethod::kRelax, metric).mean >
                         t.find(EvalMethod::kRandom, metric).mean;
  }
  const bool pass = pointing >= 0.85 && rank >= 2.0 * rank_random && beats;
  return {pass, fmt("RELAX pointing %.3f, rank %.3f vs Random rank %.3f", pointing, rank,
                    rank_random) +
                    (beats ? "; RELAX ahead on all metrics" : "; RELAX not ahead everywhere")};
}

// --- 8 ---------------------------------------------------------------------

double brute_topk(const Grid& v, const GroundTruth& gt, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t before = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] > v[i] || (v[j] == v[i] && j < i)) ++before;
    }
    if (before < k && gt.contains(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

Outcome criterion8() {
  Rng rng({8, 0});
  std::size_t mismatches = 0;
  std::size_t variance = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Grid v(8, 8);
    const bool ties = trial % 4 == 0;
    for (double& x : v.values()) x = ties ? std::floor(rng.uniform() * 5.0) : rng.uniform();
    Grid g(8, 8);
    for (double& x : g.values()) x = rng.bernoulli(0.3) ? 1.0 : 0.0;
    g[static_cast<std::size_t>(rng.uniform_int(0, 63))] = 1.0;
    const GroundTruth gt(g);
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 64));
    if (topk_intersection(v, gt, k) != brute_topk(v, gt, k)) ++mismatches;
    if (relevance_rank(v, gt) != brute_topk(v, gt, gt.positives())) ++mismatches;
    Grid cube = v;
    Grid affine = v;
    for (double& x : cube.values()) x = x * x * x;
    for (double& x : affine.values()) x = 2.0 * x + 1.0;
    for (const Grid* t : {&cube, &affine}) {
      if (pointing_game(*t, gt) != pointing_game(v, gt) ||
          topk_intersection(*t, gt, k) != topk_intersection(v, gt, k) ||
          relevance_rank(*t, gt) != relevance_rank(v, gt)) {
        ++variance;
      }
    }
  }
  return {mismatches == 0 && variance == 0,
          fmt("%g oracle mismatches, %g transform violations over 1000 grids",
              static_cast<double>(mismatches), static_cast<double>(variance))};
}

// --- 9 ---------------------------------------------------------------------

Outcome criterion9() {
  const LinearProjection proj(16, 9);
  SaliencySpec fd;
  SaliencySpec exact;
  exact.mode = GradientMode::kAnalytic;
  double worst = 0.0;
  bool bitwise = true;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Image img = random_image(16, 16, 1, 900 + k);
    const Grid a = saliency(img, proj, fd);
    const Grid b = saliency(img, proj, exact);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    SaliencySpec sg = fd;
    sg.smoothgrad = SmoothGradParams{5, 0.0, {k, 0}};
    const Grid s = smoothgrad(img, proj, sg);
    bitwise = bitwise && s.size() == a.size() &&
              std::memcmp(s.values().data(), a.values().data(), 8 * a.size()) == 0;
  }
  return {worst <= 1e-4 && bitwise,
          fmt("finite-difference max error %.3g", worst) +
              (bitwise ? "; SmoothGrad sigma=0 bitwise equal" : "; SmoothGrad differs")};
}

// --- 10 --------------------------------------------------------------------

Outcome criterion10() {
  const int H = 64;
  const int W = 64;
  MaskBatchSpec spec;
  spec.n_masks = 10000;
  spec.rng = {10, 0};
  const SeededMaskSequence masks(spec, H, W);
  std::vector<double> sum(static_cast<std::size_t>(H * W), 0.0);
  bool in_range = true;
  for (std::size_t n = 0; n < masks.size(); ++n) {
    const Mask m = masks.mask(n);
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += m[i];
      in_range = in_range && m[i] >= 0.0 && m[i] <= 1.0;
    }
  }
  double worst = 0.0;
  for (double s : sum) worst = std::max(worst, std::abs(s / 10000.0 - 0.5));

  Rng rng({10, 1});
  bool dims = true;
  for (int trial = 0; trial < 10; ++trial) {
    // Geometries whose canvas cannot cover the image are rejected by the
    // generator; draw until both axes are valid.
    auto axis = [&](int& grid, int& size) {
      do {
        grid = static_cast<int>(rng.uniform_int(2, 12));
        size = static_cast<int>(rng.uniform_int(grid + 1, 96));
      } while ((grid + 1) * (size / grid) < size);
    };
    int h = 0, hh = 0, w = 0, ww = 0;
    axis(h, hh);
    axis(w, ww);
    const RiseGeometry g = rise_geometry(h, w, hh, ww);
    Grid coarse(h, w, 1.0);
    const Grid canvas = rise_canvas(coarse, hh, ww);
    MaskStrategy strategy;
    strategy.grid_h = h;
    strategy.grid_w = w;
    Rng draw({10, 2}, static_cast<std::uint64_t>(trial));
    const Mask m = rise_mask(strategy, draw, hh, ww);
    dims = dims && g.canvas_h == (h + 1) * (hh / h) && g.canvas_w == (w + 1) * (ww / w) &&
           canvas.height() == g.canvas_h && canvas.width() == g.canvas_w &&
           m.height() == hh && m.width() == ww;
  }
  return {worst <= 0.02 && in_range && dims,
          fmt("max |mean - 0.5| = %.4f", worst) + (in_range ? "; values in [0,1]" : "; out of range") +
              (dims ? "; canvas dims match" : "; canvas dims differ")};
}

// --- 11 --------------------------------------------------------------------

bool error_names(const std::function<void()>& fn, const char* word) {
  try {
    fn();
  } catch (const Error& e) {
    return std::strstr(e.what(), word) != nullptr;
  }
  return false;
}

Outcome criterion11() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("relax_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Rng rng({11, 0});
  std::size_t failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    FloatTensor t;
    const int rank = static_cast<int>(rng.uniform_int(1, 4));
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) {
      t.dims.push_back(static_cast<std::uint32_t>(rng.uniform_int(1, 7)));
      n *= t.dims.back();
    }
    for (std::size_t i = 0; i < n; ++i) {
      t.data.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(rng.next_u64())));
    }
    write_tensor_file(dir / "t.rlxt", t);
    const FloatTensor back = read_tensor_file(dir / "t.rlxt");
    if (back.dims != t.dims ||
        std::memcmp(back.data.data(), t.data.data(), 4 * n) != 0) {
      ++failures;
    }
    const int channels = trial % 2 == 0 ? 1 : 3;
    Image img(static_cast<int>(rng.uniform_int(1, 24)), static_cast<int>(rng.uniform_int(1, 24)),
              channels);
    for (float& v : img.mutable_data()) {
      v = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
    }
    const fs::path p = dir / (channels == 1 ? "i.pgm" : "i.ppm");
    write_netpbm(p, img);
    if (!(read_netpbm(p) == img)) ++failures;
  }
  fs::remove_all(dir);

  const auto good = encode_tensor_file({{2}, {1.0f, 2.0f}});
  auto patched = [&](std::size_t at, std::uint8_t v) {
    auto b = good;
    b[at] = v;
    return b;
  };
  auto bytes = [](const char* s) {
    return std::vector<std::uint8_t>(s, s + std::strlen(s));
  };
  const bool named =
      error_names([&] { decode_tensor_file(patched(0, 'Q')); }, "magic") &&
      error_names([&] { decode_tensor_file(patched(4, 9)); }, "version") &&
      error_names([&] { decode_tensor_file(patched(6, 4)); }, "dtype") &&
      error_names([&] { decode_tensor_file(patched(7, 0)); }, "rank") &&
      error_names([&] {
        decode_tensor_file(std::vector<std::uint8_t>(good.begin(), good.end() - 2));
      }, "payload length") &&
      error_names([&] { decode_netpbm(bytes("P7\n1 1\n255\n")); }, "magic") &&
      error_names([&] { decode_netpbm(bytes("P5\n1 1\n99999\n")); }, "maxval") &&
      error_names([&] { decode_netpbm(bytes("P6\n2 2\n255\nab")); }, "truncated");
  return {failures == 0 && named,
          fmt("%g round-trip failures over 100 payloads", static_cast<double>(failures)) +
              (named ? "; malformed headers name their field" : "; an error was not named")};
}

}  // namespace
}  // namespace relax

int main() {
  using namespace relax;
  struct Entry {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Entry entries[] = {
      {1, "mask-count bound", criterion1},
      {2, "empirical concentration", criterion2},
      {3, "Parzen identity", criterion3},
      {4, "RKHS identity", criterion4},
      {5, "one-pass vs two-pass", criterion5},
      {6, "U-RELAX contract", criterion6},
      {7, "localisation above chance", criterion7},
      {8, "metric oracles", criterion8},
      {9, "saliency correctness", criterion9},
      {10, "mask statistics", criterion10},
      {11, "format round trips", criterion11},
  };
  int failed = 0;
  for (const Entry& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %-26s %s  %s (%.1fs)\n", e.id, e.name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of 11 criteria passed\n", 11 - failed);
  return failed == 0 ? 0 : 1;
}
