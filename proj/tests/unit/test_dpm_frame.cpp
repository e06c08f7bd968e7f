#include <gtest/gtest.h>

#include <random>

#include "hqsim/dpm/frame.hpp"

using namespace hqsim::dpm;

namespace {

// Bitwise reflected CRC-32 (poly 0xEDB88320), no tables.
std::uint32_t reference_crc32(const Bytes& data) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : data) {
    c ^= b;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return ~c;
}

Bytes pattern(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

}  // namespace

TEST(FrameCodec, KnownAnswer) {
  const Bytes wire = encode(Frame{FrameType::Publish, to_bytes("abc")});
  ASSERT_EQ(wire.size(), 7u + 3u + 4u);
  const Bytes header(wire.begin(), wire.begin() + 7);
  EXPECT_EQ(header, (Bytes{0x48, 0x51, 0x01, 0x01, 0x00, 0x00, 0x03}));
  const Bytes covered{0x01, 0x00, 0x00, 0x03, 'a', 'b', 'c'};
  const std::uint32_t crc = reference_crc32(covered);
  EXPECT_EQ(wire[10], crc >> 24);
  EXPECT_EQ(wire[11], (crc >> 16) & 0xff);
  EXPECT_EQ(wire[12], (crc >> 8) & 0xff);
  EXPECT_EQ(wire[13], crc & 0xff);
  EXPECT_EQ(reference_crc32(to_bytes("123456789")), 0xCBF43926u);
  EXPECT_EQ(crc32_of(to_bytes("123456789")), 0xCBF43926u);
}

TEST(FrameCodec, RoundTripAllTypesSmallSizes) {
  for (FrameType t : kAllFrameTypes) {
    for (std::size_t n : {0u, 1u, 2u, 255u, 256u, 65536u}) {
      const Frame f{t, pattern(n, static_cast<std::uint32_t>(n) * 31 + static_cast<std::uint32_t>(t))};
      EXPECT_EQ(decode(encode(f)), f) << to_string(t) << " " << n;
    }
  }
}

TEST(FrameCodec, RoundTripMaximumPayload) {
  const Frame f{FrameType::WorkItem, pattern(kMaxPayload, 7)};
  const Bytes wire = encode(f);
  EXPECT_EQ(wire[4], 0xff);
  EXPECT_EQ(wire[5], 0xff);
  EXPECT_EQ(wire[6], 0xff);
  EXPECT_EQ(decode(wire), f);
}

TEST(FrameCodec, OversizedPayloadRejected) {
  EXPECT_THROW(encode(Frame{FrameType::Result, Bytes(kMaxPayload + 1)}), FrameError);
}

TEST(FrameCodec, EverySingleBitFlipIsDetected) {
  const Bytes wire = encode(Frame{FrameType::Result, with_seq(3, to_bytes("payload"))});
  for (std::size_t i = 0; i < wire.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      Bytes bad = wire;
      bad[i] ^= static_cast<std::uint8_t>(1u << bit);
      EXPECT_THROW(decode(bad), FrameError) << "byte " << i << " bit " << bit;
    }
  }
}

TEST(FrameCodec, TruncationAndTrailingBytes) {
  const Bytes wire = encode(Frame{FrameType::Connect, to_bytes("x")});
  for (std::size_t n = 0; n < wire.size(); ++n)
    EXPECT_THROW(decode(ByteView(wire).first(n)), FrameError) << n;
  Bytes longer = wire;
  longer.push_back(0);
  EXPECT_THROW(decode(longer), FrameError);
}

TEST(FrameCodec, UnknownTypeAndVersion) {
  Bytes wire = encode(Frame{FrameType::Accept, {}});
  wire[3] = 0;
  EXPECT_THROW(decode(wire), FrameError);
  wire[3] = 10;
  EXPECT_THROW(decode(wire), FrameError);
  Bytes v2 = encode(Frame{FrameType::Accept, {}});
  v2[2] = 2;
  EXPECT_THROW(decode(v2), FrameError);
}

TEST(FrameDecoder, StreamedByteByByte) {
  std::vector<Frame> frames;
  Bytes stream;
  for (int i = 0; i < 20; ++i) {
    frames.push_back({kAllFrameTypes[i % 9], pattern(static_cast<std::size_t>(i * 13), static_cast<std::uint32_t>(i))});
    const Bytes w = encode(frames.back());
    stream.insert(stream.end(), w.begin(), w.end());
  }
  FrameDecoder d;
  std::vector<Frame> got;
  for (std::uint8_t b : stream) {
    d.feed(ByteView(&b, 1));
    while (auto f = d.next()) got.push_back(*f);
  }
  EXPECT_EQ(got, frames);
  EXPECT_EQ(d.buffered(), 0u);
}

TEST(SequencePrefix, RoundTrip) {
  const Frame f{FrameType::WorkItem, with_seq(0x01020304, to_bytes("hi"))};
  EXPECT_EQ(f.payload, (Bytes{1, 2, 3, 4, 'h', 'i'}));
  EXPECT_EQ(seq_of(f), 0x01020304u);
  EXPECT_EQ(to_text(body_of(f)), "hi");
  EXPECT_FALSE(seq_of(Frame{FrameType::WorkItem, {1, 2, 3}}));
}
