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

#include <gtest/gtest.h>

#include <functional>
#include <string>

namespace relax::wire {
namespace {

void expect_error_mentions(const std::function<void()>& fn, const std::string& word) {
  try {
    fn();
    FAIL() << "expected ProtocolError mentioning " << word;
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find(word), std::string::npos) << e.what();
  }
}

TEST(WireTest, HelloBytes) {
  const Bytes framed = frame(encode_hello());
  const Bytes expected = {6, 0, 0, 0, 'R', 'L', 'X', 'P', 1, 0};
  EXPECT_EQ(framed, expected);
  EXPECT_EQ(decode_hello(encode_hello(2)), 2);
}

TEST(WireTest, HelloReplyBytes) {
  const Bytes reply = encode_hello_reply({1, 0x01020304});
  const Bytes expected = {'R', 'L', 'X', 'P', 1, 0, 4, 3, 2, 1};
  EXPECT_EQ(reply, expected);
  const HelloReply parsed = decode_hello_reply(reply);
  EXPECT_EQ(parsed.version, 1);
  EXPECT_EQ(parsed.dim, 0x01020304u);
}

TEST(WireTest, HelloReplyRejections) {
  Bytes bad = encode_hello_reply({1, 4});
  bad[1] = 'X';
  expect_error_mentions([&] { decode_hello_reply(bad); }, "magic");
  expect_error_mentions([&] { decode_hello_reply(encode_hello_reply({2, 4})); }, "version");
  Bytes short_reply = encode_hello_reply({1, 4});
  short_reply.pop_back();
  expect_error_mentions([&] { decode_hello_reply(short_reply); }, "length");
  expect_error_mentions([&] { decode_hello_reply(encode_error("no")); }, "rejected");
  Bytes bad_hello = encode_hello();
  bad_hello[0] = 'Q';
  expect_error_mentions([&] { decode_hello(bad_hello); }, "magic");
}

TEST(WireTest, TensorBytes) {
  Tensor t;
  t.dims = {1, 1, 1, 2};
  t.data = {1.0f, -2.0f};
  const Bytes expected = {1, 4,                       // dtype, rank
                          1, 0, 0, 0, 1, 0, 0, 0,     // dims
                          1, 0, 0, 0, 2, 0, 0, 0,
                          0, 0, 0x80, 0x3f,           // 1.0f
                          0, 0, 0, 0xc0};             // -2.0f
  EXPECT_EQ(encode_tensor(t), expected);
  const Tensor back = decode_tensor(expected);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.data, t.data);
}

TEST(WireTest, TensorRejections) {
  Tensor t;
  t.dims = {2, 2};
  t.data = {1, 2, 3, 4};
  Bytes bytes = encode_tensor(t);
  Bytes dtype = bytes;
  dtype[0] = 2;
  expect_error_mentions([&] { decode_tensor(dtype); }, "dtype");
  Bytes rank = bytes;
  rank[1] = 0;
  expect_error_mentions([&] { decode_tensor(rank); }, "rank");
  Bytes truncated = bytes;
  truncated.pop_back();
  expect_error_mentions([&] { decode_tensor(truncated); }, "payload length");
  Bytes extra = bytes;
  extra.push_back(0);
  expect_error_mentions([&] { decode_tensor(extra); }, "payload length");
  expect_error_mentions([&] { decode_tensor(encode_error("boom")); }, "boom");
}

TEST(WireTest, ErrorFrames) {
  const Bytes e = encode_error("out of memory");
  EXPECT_TRUE(is_error(e));
  EXPECT_EQ(error_message(e), "out of memory");
  EXPECT_FALSE(is_error(encode_hello()));
}

TEST(WireTest, RandomTensorRoundTrips) {
  Rng rng({8, 0});
  for (int trial = 0; trial < 100; ++trial) {
    Tensor t;
    const int rank = static_cast<int>(rng.uniform_int(1, 4));
    for (int r = 0; r < rank; ++r) t.dims.push_back(static_cast<std::uint32_t>(rng.uniform_int(1, 5)));
    t.data.resize(t.element_count());
    for (float& v : t.data) v = static_cast<float>(rng.normal());
    const Tensor back = decode_tensor(encode_tensor(t));
    ASSERT_EQ(back.dims, t.dims);
    ASSERT_EQ(back.data, t.data);
  }
}

}  // namespace
}  // namespace relax::wire
