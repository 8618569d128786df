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

#include "relax/render.h"

#include <algorithm>
#include <limits>

namespace relax {

Grid normalize_for_display(const Grid& grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : grid.values()) {
    if (v == kUndefinedUncertainty) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Grid out(grid.height(), grid.width());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = grid[i];
    if (v == kUndefinedUncertainty) {
      out[i] = 0.0;
    } else if (hi > lo) {
      out[i] = (v - lo) / (hi - lo);
    } else {
      out[i] = 0.5;
    }
  }
  return out;
}

std::array<float, 3> diverging_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (t < 0.5) {
    const float u = static_cast<float>(t / 0.5);
    return {u, u, 1.0f};
  }
  const float u = static_cast<float>((1.0 - t) / 0.5);
  return {1.0f, u, u};
}

Image render_heatmap(const Grid& grid, const Image* overlay) {
  if (grid.empty()) throw InvalidArgument("cannot render an empty grid");
  if (overlay != nullptr && (overlay->height() != grid.height() ||
                             overlay->width() != grid.width())) {
    throw InvalidArgument("overlay size does not match the heatmap");
  }
  const Grid norm = normalize_for_display(grid);
  Image out(grid.height(), grid.width(), 3);
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      const auto rgb = diverging_color(norm(y, x));
      for (int c = 0; c < 3; ++c) {
        float v = rgb[c];
        if (overlay != nullptr) {
          const float base = overlay->at(y, x, overlay->channels() == 3 ? c : 0);
          v = 0.5f * v + 0.5f * base;
        }
        out.at(y, x, c) = v;
      }
    }
  }
  return out;
}

}  // namespace relax
