#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "fedcomm/util/bytes.hpp"

namespace fedcomm::codec {

enum class MsgKind : uint8_t {
  global_model = 0x01,
  client_update = 0x02,
  end = 0x03,
  hello = 0x04,
};

struct WireMessage {
  MsgKind kind = MsgKind::global_model;
  uint16_t round = 0;
  uint16_t sender_id = 0;
  Bytes payload;

  bool operator==(const WireMessage&) const = default;
};

inline constexpr size_t kFrameOverhead = 9;  // 4B length + 1B kind + 2B round + 2B sender
inline constexpr size_t kDefaultMaxFrame = 256ull * 1024 * 1024;

// [u32be N = 5 + payload_len][kind][u16be round][u16be sender_id][payload]
Bytes frame_stream_message(const WireMessage& msg);

inline size_t framed_size(size_t payload_len) { return kFrameOverhead + payload_len; }

// Incremental parser for a reliable byte stream; tolerates arbitrary read
// boundaries. One instance per connection.
class StreamParser {
 public:
  explicit StreamParser(size_t max_length = kDefaultMaxFrame) : max_length_(max_length) {}

  void feed(ByteSpan bytes);
  std::optional<WireMessage> next();

 private:
  void parse_buffer();

  size_t max_length_;
  Bytes buffer_;
  std::deque<WireMessage> ready_;
};

// Convenience for whole-buffer parsing: exactly one message, no trailing bytes.
WireMessage parse_stream_message(ByteSpan bytes);

}  // namespace fedcomm::codec
