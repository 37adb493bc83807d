#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "fedcomm/util/bytes.hpp"

namespace fedcomm::broker {

inline constexpr size_t kZmtpGreetingSize = 64;
inline constexpr size_t kZmtpMaxBody = 256ull * 1024 * 1024;

inline constexpr uint8_t kZmtpFlagMore = 0x01;
inline constexpr uint8_t kZmtpFlagLong = 0x02;
inline constexpr uint8_t kZmtpFlagCommand = 0x04;

// 64-byte greeting: signature (0xFF, 8x0x00, 0x7F), version 3.0, mechanism
// "NULL" zero-padded to 20 bytes, as-server byte, 31 zero filler bytes.
Bytes zmtp_greeting(bool as_server = false);

// Throws BrokerError naming the first offending byte offset.
void zmtp_validate_greeting(ByteSpan greeting);

struct ZmtpFrame {
  uint8_t flags = 0;
  Bytes body;

  bool more() const { return flags & kZmtpFlagMore; }
  bool is_command() const { return flags & kZmtpFlagCommand; }

  bool operator==(const ZmtpFrame&) const = default;
};

// SHORT frame for bodies <= 255 bytes, LONG otherwise; the LONG flag bit is
// set automatically from the body size.
Bytes encode_zmtp_frame(uint8_t flags, ByteSpan body);

size_t zmtp_frame_wire_size(size_t body_len);

class ZmtpFrameParser {
 public:
  explicit ZmtpFrameParser(size_t max_body = kZmtpMaxBody) : max_body_(max_body) {}
  void feed(ByteSpan bytes);
  std::optional<ZmtpFrame> next();

 private:
  size_t max_body_;
  Bytes buffer_;
  std::deque<ZmtpFrame> ready_;
};

// NULL-mechanism READY command with a Socket-Type metadata property.
Bytes zmtp_ready_body(const std::string& socket_type);
std::string zmtp_parse_ready_socket_type(const ZmtpFrame& frame);

// Subscription message: body 0x01 + prefix (0x00 + prefix cancels).
Bytes zmtp_subscribe_body(const std::string& prefix);

}  // namespace fedcomm::broker
