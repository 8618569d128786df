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

#include "relax/tensor_io.h"

#include <unistd.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace relax {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'X', 'T'};
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::size_t kHeader = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::size_t FloatTensor::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor_file(const FloatTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 255) {
    throw InvalidArgument("tensor rank must be in [1, 255]");
  }
  if (tensor.element_count() != tensor.data.size()) {
    throw InvalidArgument("tensor data length does not match its dims");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(static_cast<std::uint8_t>(kTensorFileVersion & 0xff));
  out.push_back(static_cast<std::uint8_t>(kTensorFileVersion >> 8));
  out.push_back(kDtypeF32);
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) put_u32(out, d);
  out.reserve(out.size() + 4 * tensor.data.size());
  for (float v : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FloatTensor decode_tensor_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("tensor file: bad magic");
  }
  if (bytes.size() < kHeader) throw FormatError("tensor file: truncated header (version)");
  const std::uint16_t version =
      static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kTensorFileVersion) {
    throw FormatError("tensor file: unsupported version " + std::to_string(version));
  }
  if (bytes[6] != kDtypeF32) {
    throw FormatError("tensor file: unsupported dtype " + std::to_string(bytes[6]));
  }
  const std::size_t rank = bytes[7];
  if (rank == 0) throw FormatError("tensor file: rank must be positive");
  if (bytes.size() < kHeader + 4 * rank) {
    throw FormatError("tensor file: truncated dims");
  }
  FloatTensor t;
  t.dims.resize(rank);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.dims[i] = get_u32(bytes.data() + kHeader + 4 * i);
    count *= t.dims[i];
    if (count > (std::uint64_t{1} << 34)) throw FormatError("tensor file: dims too large");
  }
  const std::size_t start = kHeader + 4 * rank;
  if (bytes.size() - start != 4 * count) {
    throw FormatError("tensor file: payload length " +
                      std::to_string(bytes.size() - start) + " bytes, expected " +
                      std::to_string(4 * count));
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes.data() + start + 4 * i));
  }
  return t;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_tensor_file(const std::filesystem::path& path,
                       const FloatTensor& tensor) {
  write_file_atomic(path, encode_tensor_file(tensor));
}

FloatTensor read_tensor_file(const std::filesystem::path& path) {
  return decode_tensor_file(read_file(path));
}

FloatTensor grid_to_tensor(const Grid& grid) {
  FloatTensor t;
  t.dims = {static_cast<std::uint32_t>(grid.height()),
            static_cast<std::uint32_t>(grid.width())};
  t.data.reserve(grid.size());
  for (double v : grid.values()) t.data.push_back(static_cast<float>(v));
  return t;
}

Grid tensor_to_grid(const FloatTensor& tensor) {
  if (tensor.dims.size() != 2) {
    throw FormatError("expected a rank-2 tensor, got rank " +
                      std::to_string(tensor.dims.size()));
  }
  std::vector<double> values(tensor.data.begin(), tensor.data.end());
  return Grid(static_cast<int>(tensor.dims[0]), static_cast<int>(tensor.dims[1]),
              std::move(values));
}

FloatTensor image_to_tensor(const Image& image) {
  FloatTensor t;
  t.dims = {static_cast<std::uint32_t>(image.height()),
            static_cast<std::uint32_t>(image.width()),
            static_cast<std::uint32_t>(image.channels())};
  t.data.assign(image.data().begin(), image.data().end());
  return t;
}

Image tensor_to_image(const FloatTensor& tensor) {
  if (tensor.dims.size() != 3) {
    throw FormatError("expected a rank-3 (H, W, C) tensor, got rank " +
                      std::to_string(tensor.dims.size()));
  }
  return Image(static_cast<int>(tensor.dims[0]), static_cast<int>(tensor.dims[1]),
               static_cast<int>(tensor.dims[2]), tensor.data);
}

}  // namespace relax
