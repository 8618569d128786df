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

#include "relax/wire_protocol.h"

#include <algorithm>
#include <bit>
#include <cstring>

namespace relax::wire {

namespace {

bool has_magic(std::span<const std::uint8_t> payload, const char (&magic)[4]) {
  return payload.size() >= 4 && std::memcmp(payload.data(), magic, 4) == 0;
}

void put_f32(Bytes& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

}  // namespace

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

Bytes frame(std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxPayload) {
    throw ProtocolError("payload length exceeds protocol limit");
  }
  Bytes out;
  out.reserve(payload.size() + 4);
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes encode_hello(std::uint16_t version) {
  Bytes out(kMagic, kMagic + 4);
  put_u16(out, version);
  return out;
}

std::uint16_t decode_hello(std::span<const std::uint8_t> payload) {
  if (!has_magic(payload, kMagic)) throw ProtocolError("handshake: bad magic");
  if (payload.size() != 6) throw ProtocolError("handshake: bad length");
  return get_u16(payload.data() + 4);
}

Bytes encode_hello_reply(const HelloReply& reply) {
  Bytes out(kMagic, kMagic + 4);
  put_u16(out, reply.version);
  put_u32(out, reply.dim);
  return out;
}

HelloReply decode_hello_reply(std::span<const std::uint8_t> payload) {
  if (is_error(payload)) {
    throw ProtocolError("handshake rejected by child: " + error_message(payload));
  }
  if (!has_magic(payload, kMagic)) {
    throw ProtocolError("handshake reply: bad magic");
  }
  if (payload.size() != 10) throw ProtocolError("handshake reply: bad length");
  HelloReply reply;
  reply.version = get_u16(payload.data() + 4);
  reply.dim = get_u32(payload.data() + 6);
  if (reply.version != kVersion) {
    throw ProtocolError("handshake reply: unsupported version " +
                        std::to_string(reply.version));
  }
  if (reply.dim == 0) throw ProtocolError("handshake reply: dims must be positive");
  return reply;
}

Bytes encode_tensor(const Tensor& tensor) {
  if (tensor.dims.size() > 255) throw ProtocolError("tensor rank exceeds 255");
  if (tensor.element_count() != tensor.data.size()) {
    throw ProtocolError("tensor payload length does not match dims");
  }
  Bytes out;
  out.reserve(2 + 4 * tensor.dims.size() + 4 * tensor.data.size());
  out.push_back(kDtypeF32);
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) put_u32(out, d);
  for (float v : tensor.data) put_f32(out, v);
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> payload) {
  if (is_error(payload)) {
    throw ProtocolError("child reported error: " + error_message(payload));
  }
  if (payload.size() < 2) throw ProtocolError("tensor: payload length too short");
  if (payload[0] != kDtypeF32) {
    throw ProtocolError("tensor: unsupported dtype " + std::to_string(payload[0]));
  }
  const std::size_t rank = payload[1];
  if (rank == 0) throw ProtocolError("tensor: rank must be positive");
  if (payload.size() < 2 + 4 * rank) {
    throw ProtocolError("tensor: payload length too short for dims");
  }
  Tensor t;
  t.dims.resize(rank);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.dims[i] = get_u32(payload.data() + 2 + 4 * i);
    count *= t.dims[i];
    if (count > kMaxPayload) throw ProtocolError("tensor: dims too large");
  }
  const std::size_t header = 2 + 4 * rank;
  if (payload.size() - header != 4 * count) {
    throw ProtocolError("tensor: payload length " +
                        std::to_string(payload.size() - header) +
                        " does not match dims (" + std::to_string(4 * count) +
                        ")");
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(payload.data() + header + 4 * i));
  }
  return t;
}

Bytes encode_error(const std::string& message) {
  Bytes out(kErrorMagic, kErrorMagic + 4);
  out.insert(out.end(), message.begin(), message.end());
  return out;
}

bool is_error(std::span<const std::uint8_t> payload) {
  return has_magic(payload, kErrorMagic);
}

std::string error_message(std::span<const std::uint8_t> payload) {
  if (payload.size() <= 4) return {};
  return std::string(payload.begin() + 4, payload.end());
}

}  // namespace relax::wire
