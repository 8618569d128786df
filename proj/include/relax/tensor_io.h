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

// Tensor files.
//
//   offset  size      field
//   0       4         magic "RLXT"
//   4       2         version, little-endian (1)
//   6       1         dtype (1 = 32-bit little-endian IEEE-754 float)
//   7       1         rank
//   8       4 * rank  dims, little-endian u32
//   ...     4 * prod  row-major payload
//
// Readers reject any deviation, naming the first violated field in the
// FormatError message ("magic", "version", "dtype", "rank", "dims",
// "payload length").

#ifndef RELAX_TENSOR_IO_H_
#define RELAX_TENSOR_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "relax/core.h"

namespace relax {

struct FloatTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  friend bool operator==(const FloatTensor&, const FloatTensor&) = default;
};

inline constexpr std::uint16_t kTensorFileVersion = 1;

std::vector<std::uint8_t> encode_tensor_file(const FloatTensor& tensor);
FloatTensor decode_tensor_file(std::span<const std::uint8_t> bytes);

// Written to a temporary sibling and renamed into place, so readers never
// observe a partial file.
void write_tensor_file(const std::filesystem::path& path,
                       const FloatTensor& tensor);
FloatTensor read_tensor_file(const std::filesystem::path& path);

// (H, W) tensors. Values are narrowed to float.
FloatTensor grid_to_tensor(const Grid& grid);
Grid tensor_to_grid(const FloatTensor& tensor);

// (H, W, C) tensors in the image's native layout.
FloatTensor image_to_tensor(const Image& image);
Image tensor_to_image(const FloatTensor& tensor);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

}  // namespace relax

#endif  // RELAX_TENSOR_IO_H_
