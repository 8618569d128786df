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

#include "relax/netpbm.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "relax/tensor_io.h"

namespace relax {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long next_number(const char* field) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw FormatError(std::string("netpbm: ") + field + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("netpbm: missing ") + field);
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("netpbm: header not terminated by whitespace");
    }
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
};

}  // namespace

Image decode_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("netpbm: bad magic (expected P5 or P6)");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader header(bytes);
  const long width = header.next_number("width");
  const long height = header.next_number("height");
  const long maxval = header.next_number("maxval");
  if (width <= 0 || height <= 0) throw FormatError("netpbm: empty image");
  if (maxval <= 0 || maxval > 65535) throw FormatError("netpbm: maxval out of range");
  const std::size_t start = header.raster_start();
  const std::size_t bps = maxval < 256 ? 1 : 2;
  const std::size_t count = static_cast<std::size_t>(width) *
                            static_cast<std::size_t>(height) *
                            static_cast<std::size_t>(channels);
  if (bytes.size() - start < count * bps) throw FormatError("netpbm: truncated raster");
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned v = bps == 1 ? bytes[start + i]
                          : (unsigned{bytes[start + 2 * i]} << 8) | bytes[start + 2 * i + 1];
    if (v > static_cast<unsigned>(maxval)) throw FormatError("netpbm: sample exceeds maxval");
    data[i] = static_cast<float>(v) / static_cast<float>(maxval);
  }
  return Image(static_cast<int>(height), static_cast<int>(width), channels,
               std::move(data));
}

Image read_netpbm(const std::filesystem::path& path) {
  try {
    return decode_netpbm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_netpbm(const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw InvalidArgument("netpbm: images need 1 or 3 channels");
  }
  const std::string header = std::string(image.channels() == 1 ? "P5" : "P6") +
                             "\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.data().size());
  for (float v : image.data()) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0f)));
  }
  return out;
}

void write_netpbm(const std::filesystem::path& path, const Image& image) {
  write_file_atomic(path, encode_netpbm(image));
}

Image grid_to_image(const Grid& grid) {
  std::vector<float> data(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    data[i] = static_cast<float>(std::clamp(grid[i], 0.0, 1.0));
  }
  return Image(grid.height(), grid.width(), 1, std::move(data));
}

}  // namespace relax
