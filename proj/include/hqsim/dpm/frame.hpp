#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

namespace hqsim::dpm {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

class FrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wire layout:
//   'H' 'Q' | version 0x01 | type | length (3 bytes BE) | payload | CRC32 BE
// The CRC covers type, length and payload.
inline constexpr std::uint8_t kMagic0 = 0x48;
inline constexpr std::uint8_t kMagic1 = 0x51;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 7;
inline constexpr std::size_t kTrailerSize = 4;
inline constexpr std::size_t kMaxPayload = (std::size_t{1} << 24) - 1;

enum class FrameType : std::uint8_t {
  Publish = 1,
  Lookup = 2,
  LookupReply = 3,
  Connect = 4,
  Accept = 5,
  WorkItem = 6,
  Result = 7,
  Shutdown = 8,
  Disconnect = 9,
};

inline constexpr FrameType kAllFrameTypes[] = {
    FrameType::Publish,  FrameType::Lookup, FrameType::LookupReply,
    FrameType::Connect,  FrameType::Accept, FrameType::WorkItem,
    FrameType::Result,   FrameType::Shutdown, FrameType::Disconnect,
};

inline bool is_frame_type(std::uint8_t code) { return code >= 1 && code <= 9; }

inline std::string_view to_string(FrameType t) {
  switch (t) {
    case FrameType::Publish: return "Publish";
    case FrameType::Lookup: return "Lookup";
    case FrameType::LookupReply: return "LookupReply";
    case FrameType::Connect: return "Connect";
    case FrameType::Accept: return "Accept";
    case FrameType::WorkItem: return "WorkItem";
    case FrameType::Result: return "Result";
    case FrameType::Shutdown: return "Shutdown";
    case FrameType::Disconnect: return "Disconnect";
  }
  return "?";
}

struct Frame {
  FrameType type{FrameType::Publish};
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

inline std::uint32_t crc32_of(ByteView a, ByteView b = {}, ByteView c = {}) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  for (ByteView part : {a, b, c})
    if (!part.empty()) crc = ::crc32(crc, part.data(), static_cast<uInt>(part.size()));
  return static_cast<std::uint32_t>(crc);
}

inline void put_be32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_be32(ByteView in) {
  return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
         (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

inline Bytes encode(const Frame& f) {
  if (f.payload.size() > kMaxPayload)
    throw FrameError("payload of " + std::to_string(f.payload.size()) + " bytes exceeds 2^24-1");
  const auto len = static_cast<std::uint32_t>(f.payload.size());
  Bytes out;
  out.reserve(kHeaderSize + f.payload.size() + kTrailerSize);
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(f.type));
  out.push_back(static_cast<std::uint8_t>(len >> 16));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  put_be32(out, crc32_of(ByteView(out).subspan(3, 4), f.payload));
  return out;
}

/// Incremental decoder for a byte stream carrying back-to-back frames.
class FrameDecoder {
 public:
  void feed(ByteView data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

  /// Next complete frame, or nullopt if more bytes are needed. Throws
  /// FrameError on corruption; the decoder is unusable afterwards.
  std::optional<Frame> next() {
    const std::size_t avail = buf_.size() - pos_;
    if (avail < kHeaderSize) return std::nullopt;
    const ByteView hdr(buf_.data() + pos_, kHeaderSize);
    if (hdr[0] != kMagic0 || hdr[1] != kMagic1) throw FrameError("bad magic");
    if (hdr[2] != kVersion) throw FrameError("unsupported version " + std::to_string(hdr[2]));
    if (!is_frame_type(hdr[3])) throw FrameError("unknown frame type " + std::to_string(hdr[3]));
    const std::size_t len = (std::size_t{hdr[4]} << 16) | (std::size_t{hdr[5]} << 8) | hdr[6];
    if (avail < kHeaderSize + len + kTrailerSize) return std::nullopt;

    const ByteView payload(buf_.data() + pos_ + kHeaderSize, len);
    const std::uint32_t want = get_be32(ByteView(buf_.data() + pos_ + kHeaderSize + len, 4));
    if (crc32_of(hdr.subspan(3, 4), payload) != want) throw FrameError("CRC mismatch");

    Frame f{static_cast<FrameType>(hdr[3]), Bytes(payload.begin(), payload.end())};
    pos_ += kHeaderSize + len + kTrailerSize;
    if (pos_ == buf_.size()) {
      buf_.clear();
      pos_ = 0;
    } else if (pos_ > (1u << 20)) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
      pos_ = 0;
    }
    return f;
  }

  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_{0};
};

/// Decodes exactly one frame occupying the whole buffer.
inline Frame decode(ByteView bytes) {
  FrameDecoder d;
  d.feed(bytes);
  auto f = d.next();
  if (!f) throw FrameError("truncated frame");
  if (d.buffered() != 0) throw FrameError("trailing bytes after frame");
  return *std::move(f);
}

// WorkItem and Result payloads start with a 4-byte big-endian sequence number.
inline Bytes with_seq(std::uint32_t seq, ByteView body) {
  Bytes out;
  out.reserve(4 + body.size());
  put_be32(out, seq);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

inline std::optional<std::uint32_t> seq_of(const Frame& f) {
  if (f.payload.size() < 4) return std::nullopt;
  return get_be32(f.payload);
}

inline ByteView body_of(const Frame& f) { return ByteView(f.payload).subspan(4); }

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_text(ByteView b) { return std::string(b.begin(), b.end()); }

}  // namespace hqsim::dpm
