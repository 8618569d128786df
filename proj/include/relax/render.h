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

#ifndef RELAX_RENDER_H_
#define RELAX_RENDER_H_

#include <array>

#include "relax/core.h"

namespace relax {

// Min-max normalisation to [0, 1]; a constant grid maps to 0.5. Undefined
// uncertainty values are excluded from the range and rendered as 0.
Grid normalize_for_display(const Grid& grid);

// Diverging blue-white-red map of t in [0, 1].
std::array<float, 3> diverging_color(double t);

// RGB heatmap of the normalised grid. With an overlay image of the same
// size, the heatmap is alpha-blended over it at alpha = 0.5.
Image render_heatmap(const Grid& grid, const Image* overlay = nullptr);

}  // namespace relax

#endif  // RELAX_RENDER_H_
