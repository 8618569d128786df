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

#ifndef RELAX_EXTERNAL_EXTRACTOR_H_
#define RELAX_EXTERNAL_EXTRACTOR_H_

#include <sys/types.h>

#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "relax/extractors.h"
#include "relax/wire_protocol.h"

namespace relax {

// Extractor backed by a child process speaking the wire protocol.
//
// The child is launched and the handshake completed in the constructor.
// A session is single-lane: calls are serialised and each request frame is
// answered before the next is sent. Batches are split into requests of at
// most `batch_size` images.
class ExternalExtractor : public Extractor {
 public:
  explicit ExternalExtractor(ExternalOptions options);
  ~ExternalExtractor() override;

  ExternalExtractor(const ExternalExtractor&) = delete;
  ExternalExtractor& operator=(const ExternalExtractor&) = delete;

  Embedding extract(const Image& image) const override;
  std::vector<Embedding> extract_batch(
      std::span<const Image> images) const override;
  std::string describe() const override;

  std::uint32_t dim() const { return dim_; }

  // Sends a raw frame payload and returns the raw reply payload. Exposed for
  // protocol conformance tests.
  wire::Bytes round_trip(std::span<const std::uint8_t> payload) const;

 private:
  void send_frame(std::span<const std::uint8_t> payload) const;
  wire::Bytes receive_frame() const;
  // Throws an ExtractorError that includes the child's exit status and the
  // tail of its standard error.
  [[noreturn]] void fail(const std::string& what) const;
  void drain_stderr() const;
  void shutdown() noexcept;

  ExternalOptions options_;
  mutable pid_t pid_ = -1;
  int io_fd_ = -1;   // parent end of the child's stdin/stdout socket
  int err_fd_ = -1;  // read end of the child's stderr
  std::uint32_t dim_ = 0;
  mutable std::mutex mu_;
  mutable std::string stderr_tail_;
  mutable bool broken_ = false;
};

}  // namespace relax

#endif  // RELAX_EXTERNAL_EXTRACTOR_H_
