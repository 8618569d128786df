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

#include "relax/external_extractor.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

namespace relax {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kStderrTail = 4096;

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

}  // namespace

ExternalExtractor::ExternalExtractor(ExternalOptions options)
    : options_(std::move(options)) {
  if (options_.command.empty()) {
    throw InvalidArgument("external extractor needs a command line");
  }
  if (options_.batch_size == 0) {
    throw InvalidArgument("external extractor batch size must be positive");
  }
  int sock[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sock) != 0) {
    throw ExtractorError(std::string("socketpair: ") + std::strerror(errno));
  }
  int err[2];
  if (pipe2(err, O_CLOEXEC) != 0) {
    ::close(sock[0]);
    ::close(sock[1]);
    throw ExtractorError(std::string("pipe: ") + std::strerror(errno));
  }
  std::vector<char*> argv;
  for (auto& arg : options_.command) argv.push_back(arg.data());
  argv.push_back(nullptr);

  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {sock[0], sock[1], err[0], err[1]}) ::close(fd);
    throw ExtractorError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    // dup2 clears FD_CLOEXEC on the targets.
    dup2(sock[1], STDIN_FILENO);
    dup2(sock[1], STDOUT_FILENO);
    dup2(err[1], STDERR_FILENO);
    execvp(argv[0], argv.data());
    const std::string msg =
        std::string("exec ") + argv[0] + ": " + std::strerror(errno) + "\n";
    [[maybe_unused]] auto n = ::write(STDERR_FILENO, msg.data(), msg.size());
    _exit(127);
  }
  ::close(sock[1]);
  ::close(err[1]);
  io_fd_ = sock[0];
  err_fd_ = err[0];
  set_nonblocking(io_fd_);
  set_nonblocking(err_fd_);

  try {
    const wire::Bytes hello = wire::encode_hello();
    const wire::Bytes reply = round_trip(hello);
    wire::HelloReply parsed;
    try {
      parsed = wire::decode_hello_reply(reply);
    } catch (const wire::ProtocolError& e) {
      fail(e.what());
    }
    dim_ = parsed.dim;
  } catch (...) {
    shutdown();
    throw;
  }
}

ExternalExtractor::~ExternalExtractor() { shutdown(); }

void ExternalExtractor::shutdown() noexcept {
  close_fd(io_fd_);
  if (pid_ > 0) {
    const auto deadline = Clock::now() + std::chrono::seconds(2);
    int status = 0;
    while (waitpid(pid_, &status, WNOHANG) == 0) {
      if (Clock::now() > deadline) {
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid_ = -1;
  }
  close_fd(err_fd_);
}

void ExternalExtractor::drain_stderr() const {
  if (err_fd_ < 0) return;
  char buf[1024];
  for (;;) {
    const ssize_t n = ::read(err_fd_, buf, sizeof(buf));
    if (n <= 0) break;
    stderr_tail_.append(buf, static_cast<std::size_t>(n));
    if (stderr_tail_.size() > kStderrTail) {
      stderr_tail_.erase(0, stderr_tail_.size() - kStderrTail);
    }
  }
}

void ExternalExtractor::fail(const std::string& what) const {
  broken_ = true;
  std::string msg = "external extractor: " + what;
  if (pid_ > 0) {
    // Give a dying child a moment so its status and last words are visible.
    int status = 0;
    pid_t done = 0;
    const auto deadline = Clock::now() + std::chrono::milliseconds(200);
    while ((done = waitpid(pid_, &status, WNOHANG)) == 0 &&
           Clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (done == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) {
        msg += "; child exited with status " + std::to_string(WEXITSTATUS(status));
      } else if (WIFSIGNALED(status)) {
        msg += "; child killed by signal " + std::to_string(WTERMSIG(status));
      }
    }
  }
  drain_stderr();
  if (!stderr_tail_.empty()) msg += "; stderr: " + stderr_tail_;
  throw wire::ProtocolError(msg);
}

void ExternalExtractor::send_frame(std::span<const std::uint8_t> payload) const {
  const wire::Bytes bytes = wire::frame(payload);
  const auto deadline = Clock::now() + options_.timeout;
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(io_fd_, bytes.data() + sent, bytes.size() - sent,
                             MSG_NOSIGNAL);
    if (n > 0) {
      sent += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
      fail(std::string("write failed: ") + std::strerror(errno));
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (left.count() <= 0) fail("timeout while sending request");
    pollfd fds[2] = {{io_fd_, POLLOUT, 0}, {err_fd_, POLLIN, 0}};
    ::poll(fds, 2, static_cast<int>(left.count()));
    if (fds[1].revents & POLLIN) drain_stderr();
  }
}

wire::Bytes ExternalExtractor::receive_frame() const {
  const auto deadline = Clock::now() + options_.timeout;
  wire::Bytes buffer;
  std::size_t want = 4;
  bool have_header = false;
  while (buffer.size() < want) {
    std::uint8_t chunk[65536];
    const std::size_t room = std::min(sizeof(chunk), want - buffer.size());
    const ssize_t n = ::recv(io_fd_, chunk, room, 0);
    if (n > 0) {
      buffer.insert(buffer.end(), chunk, chunk + n);
      if (!have_header && buffer.size() == 4) {
        const std::uint32_t len = wire::get_u32(buffer.data());
        if (len > wire::kMaxPayload) fail("frame: payload length too large");
        want = 4 + static_cast<std::size_t>(len);
        have_header = true;
      }
      continue;
    }
    if (n == 0) {
      fail(buffer.empty() ? "child closed its output"
                          : "truncated frame: child closed its output after " +
                                std::to_string(buffer.size()) + " bytes");
    }
    if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
      fail(std::string("read failed: ") + std::strerror(errno));
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (left.count() <= 0) fail("timeout waiting for response");
    pollfd fds[2] = {{io_fd_, POLLIN, 0}, {err_fd_, POLLIN, 0}};
    ::poll(fds, 2, static_cast<int>(left.count()));
    if (fds[1].revents & POLLIN) drain_stderr();
  }
  return wire::Bytes(buffer.begin() + 4, buffer.end());
}

wire::Bytes ExternalExtractor::round_trip(
    std::span<const std::uint8_t> payload) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (broken_) throw wire::ProtocolError("external extractor: session is broken");
  send_frame(payload);
  return receive_frame();
}

Embedding ExternalExtractor::extract(const Image& image) const {
  return extract_batch(std::span<const Image>(&image, 1)).front();
}

std::vector<Embedding> ExternalExtractor::extract_batch(
    std::span<const Image> images) const {
  std::vector<Embedding> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size();
       start += options_.batch_size) {
    const std::size_t count =
        std::min(options_.batch_size, images.size() - start);
    const Image& first = images[start];
    wire::Tensor request;
    request.dims = {static_cast<std::uint32_t>(count),
                    static_cast<std::uint32_t>(first.channels()),
                    static_cast<std::uint32_t>(first.height()),
                    static_cast<std::uint32_t>(first.width())};
    request.data.reserve(count * first.data().size());
    for (std::size_t b = start; b < start + count; ++b) {
      const Image& img = images[b];
      if (img.height() != first.height() || img.width() != first.width() ||
          img.channels() != first.channels()) {
        throw ExtractorError("external extractor: batch images differ in shape",
                             b);
      }
      for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < img.height(); ++y) {
          for (int x = 0; x < img.width(); ++x) {
            request.data.push_back(img.at(y, x, c));
          }
        }
      }
    }
    const wire::Bytes reply = round_trip(wire::encode_tensor(request));
    wire::Tensor response;
    try {
      response = wire::decode_tensor(reply);
    } catch (const wire::ProtocolError& e) {
      std::lock_guard<std::mutex> lock(mu_);
      fail(e.what());
    }
    if (response.dims.size() != 2 || response.dims[0] != count ||
        response.dims[1] != dim_) {
      std::lock_guard<std::mutex> lock(mu_);
      fail("response dims do not match (" + std::to_string(count) + ", " +
           std::to_string(dim_) + ")");
    }
    for (std::size_t b = 0; b < count; ++b) {
      std::vector<double> v(response.data.begin() + static_cast<std::ptrdiff_t>(b * dim_),
                            response.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * dim_));
      for (double x : v) {
        if (!std::isfinite(x)) {
          throw ExtractorError("external extractor returned a non-finite value",
                               start + b);
        }
      }
      out.emplace_back(std::move(v));
    }
  }
  return out;
}

std::string ExternalExtractor::describe() const {
  std::string cmd;
  for (const auto& arg : options_.command) cmd += arg + " ";
  return "extractor=external;dim=" + std::to_string(dim_) + ";cmd=" + cmd;
}

}  // namespace relax
