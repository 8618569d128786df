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

// Binary PGM (P5) and PPM (P6) images.

#ifndef RELAX_NETPBM_H_
#define RELAX_NETPBM_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "relax/core.h"

namespace relax {

// Accepts maxval up to 65535 and '#' comments in the header. Intensities are
// scaled to [0, 1].
Image decode_netpbm(std::span<const std::uint8_t> bytes);
Image read_netpbm(const std::filesystem::path& path);

// P5 for one channel, P6 for three; maxval 255 with rounding.
std::vector<std::uint8_t> encode_netpbm(const Image& image);
void write_netpbm(const std::filesystem::path& path, const Image& image);

// Single-channel image of a grid clamped to [0, 1].
Image grid_to_image(const Grid& grid);

}  // namespace relax

#endif  // RELAX_NETPBM_H_
