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

// Binary protocol spoken with external extractor processes over their
// standard input and output.
//
// Every message is a frame: a 4-byte little-endian unsigned payload length
// followed by the payload.
//
//   hello       "RLXP" u16 version                      (parent -> child)
//   hello reply "RLXP" u16 version u32 dim              (child -> parent)
//   tensor      u8 dtype(1 = f32 LE) u8 rank u32 dims[rank] data
//   error       "RLXE" UTF-8 message                    (child -> parent)
//
// All integers are little-endian. Requests are (B, C, H, W) tensors and each
// is answered by exactly one (B, D) tensor or an error frame.

#ifndef RELAX_WIRE_PROTOCOL_H_
#define RELAX_WIRE_PROTOCOL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relax/extractors.h"

namespace relax::wire {

inline constexpr char kMagic[4] = {'R', 'L', 'X', 'P'};
inline constexpr char kErrorMagic[4] = {'R', 'L', 'X', 'E'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;
// Upper bound on accepted payloads (1 GiB).
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

using Bytes = std::vector<std::uint8_t>;

// A protocol violation. The message names the offending field.
class ProtocolError : public ExtractorError {
 public:
  using ExtractorError::ExtractorError;
};

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

struct HelloReply {
  std::uint16_t version = 0;
  std::uint32_t dim = 0;
};

// Prepends the 4-byte length.
Bytes frame(std::span<const std::uint8_t> payload);

Bytes encode_hello(std::uint16_t version = kVersion);
// Returns the version; throws ProtocolError("magic" / "length").
std::uint16_t decode_hello(std::span<const std::uint8_t> payload);

Bytes encode_hello_reply(const HelloReply& reply);
// Throws ProtocolError naming "magic", "length" or "version".
HelloReply decode_hello_reply(std::span<const std::uint8_t> payload);

Bytes encode_tensor(const Tensor& tensor);
// Throws ProtocolError naming "dtype", "rank", "dims" or "payload length".
Tensor decode_tensor(std::span<const std::uint8_t> payload);

Bytes encode_error(const std::string& message);
bool is_error(std::span<const std::uint8_t> payload);
std::string error_message(std::span<const std::uint8_t> payload);

void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
std::uint16_t get_u16(const std::uint8_t* p);
std::uint32_t get_u32(const std::uint8_t* p);

}  // namespace relax::wire

#endif  // RELAX_WIRE_PROTOCOL_H_
