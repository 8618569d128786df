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

// Wire-protocol peer for tests. In the default mode it echoes each
// (B, C, H, W) request as a (B, C*H*W) response. --fault injects one
// misbehaviour:
//
//   bad-magic      hello reply with the wrong magic
//   bad-version    hello reply announcing version 2
//   short-hello    hello reply without the dim field
//   truncate       announces a response frame, sends part of it, exits
//   die            prints to stderr and exits on request --after
//   hang           never answers request --after
//   error-frame    answers request --after with an error frame
//   wrong-dims     answers with (B, D + 1)
//   bad-dtype      answers with dtype 2

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>

#include "relax/wire_protocol.h"

namespace {

using relax::wire::Bytes;

bool read_exact(void* buf, std::size_t n) {
  auto* p = static_cast<std::uint8_t*>(buf);
  while (n > 0) {
    const ssize_t r = ::read(STDIN_FILENO, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void write_all(const Bytes& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t r = ::write(STDOUT_FILENO, bytes.data() + sent, bytes.size() - sent);
    if (r <= 0) std::exit(4);
    sent += static_cast<std::size_t>(r);
  }
}

bool read_frame(Bytes& payload) {
  std::uint8_t len[4];
  if (!read_exact(len, 4)) return false;
  payload.resize(relax::wire::get_u32(len));
  return read_exact(payload.data(), payload.size());
}

void send(const Bytes& payload) { write_all(relax::wire::frame(payload)); }

}  // namespace

int main(int argc, char** argv) {
  std::uint32_t dim = 4;
  std::string fault = "none";
  int after = 0;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    if (key == "--dim") dim = static_cast<std::uint32_t>(std::stoul(argv[i + 1]));
    if (key == "--fault") fault = argv[i + 1];
    if (key == "--after") after = std::stoi(argv[i + 1]);
  }

  Bytes payload;
  if (!read_frame(payload)) return 2;
  try {
    const std::uint16_t version = relax::wire::decode_hello(payload);
    if (version != relax::wire::kVersion) {
      std::fprintf(stderr, "unsupported protocol version %u\n", version);
      send(relax::wire::encode_error("unsupported protocol version"));
      return 2;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bad hello: %s\n", e.what());
    return 2;
  }

  Bytes reply = relax::wire::encode_hello_reply({relax::wire::kVersion, dim});
  if (fault == "bad-magic") reply[0] = 'X';
  if (fault == "bad-version") reply[4] = 2;
  if (fault == "short-hello") reply.resize(6);
  send(reply);

  for (int request = 0;; ++request) {
    if (!read_frame(payload)) return 0;  // parent closed the session
    const bool now = request == after;
    if (now && fault == "die") {
      std::fprintf(stderr, "fake peer: simulated crash on request %d\n", request);
      std::fflush(stderr);
      return 3;
    }
    if (now && fault == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    if (now && fault == "error-frame") {
      send(relax::wire::encode_error("model exploded"));
      continue;
    }
    relax::wire::Tensor request_tensor;
    try {
      request_tensor = relax::wire::decode_tensor(payload);
    } catch (const std::exception& e) {
      send(relax::wire::encode_error(e.what()));
      return 2;
    }
    const auto& d = request_tensor.dims;
    if (d.size() != 4 || d[1] * d[2] * d[3] != dim) {
      send(relax::wire::encode_error("request shape does not match dim"));
      return 2;
    }
    relax::wire::Tensor response;
    response.dims = {d[0], dim};
    response.data = request_tensor.data;
    if (fault == "wrong-dims") {
      response.dims[1] = dim + 1;
      response.data.resize(static_cast<std::size_t>(d[0]) * (dim + 1), 0.0f);
    }
    Bytes out = relax::wire::encode_tensor(response);
    if (fault == "bad-dtype") out[0] = 2;
    if (now && fault == "truncate") {
      Bytes framed = relax::wire::frame(out);
      framed.resize(framed.size() / 2);
      write_all(framed);
      return 0;
    }
    send(out);
  }
}
