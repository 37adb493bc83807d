#include "fedcomm/broker/zmtp.hpp"

#include <cstring>

#include "fedcomm/errors.hpp"

namespace fedcomm::broker {

Bytes zmtp_greeting(bool as_server) {
  Bytes g(kZmtpGreetingSize, 0x00);
  g[0] = 0xFF;
  g[9] = 0x7F;
  g[10] = 0x03;  // version major
  g[11] = 0x00;  // version minor
  std::memcpy(g.data() + 12, "NULL", 4);
  g[32] = as_server ? 0x01 : 0x00;
  return g;
}

void zmtp_validate_greeting(ByteSpan greeting) {
  if (greeting.size() != kZmtpGreetingSize) {
    throw BrokerError("zmtp greeting: expected 64 bytes, got " +
                      std::to_string(greeting.size()));
  }
  if (greeting[0] != 0xFF) throw BrokerError("zmtp greeting: bad signature at byte offset 0");
  if (greeting[9] != 0x7F) throw BrokerError("zmtp greeting: bad signature at byte offset 9");
  if (greeting[10] != 0x03) {
    throw BrokerError("zmtp greeting: unsupported version major at byte offset 10");
  }
  if (greeting[11] != 0x00) {
    throw BrokerError("zmtp greeting: unsupported version minor at byte offset 11");
  }
  static const uint8_t null_mechanism[20] = {'N', 'U', 'L', 'L'};
  for (size_t i = 0; i < 20; ++i) {
    if (greeting[12 + i] != null_mechanism[i]) {
      throw BrokerError("zmtp greeting: unsupported mechanism at byte offset " +
                        std::to_string(12 + i));
    }
  }
}

Bytes encode_zmtp_frame(uint8_t flags, ByteSpan body) {
  if (body.size() > kZmtpMaxBody) throw CodecError("zmtp frame: body exceeds maximum");
  Bytes out;
  if (body.size() > 255) {
    out.push_back(flags | kZmtpFlagLong);
    util::put_u64be(out, body.size());
  } else {
    out.push_back(flags & ~kZmtpFlagLong);
    out.push_back(static_cast<uint8_t>(body.size()));
  }
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

size_t zmtp_frame_wire_size(size_t body_len) {
  return body_len + (body_len > 255 ? 9 : 2);
}

void ZmtpFrameParser::feed(ByteSpan bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  size_t off = 0;
  while (buffer_.size() - off >= 2) {
    const uint8_t flags = buffer_[off];
    if (flags & ~(kZmtpFlagMore | kZmtpFlagLong | kZmtpFlagCommand)) {
      throw CodecError("zmtp frame: reserved flag bits set");
    }
    uint64_t size = 0;
    size_t header = 0;
    if (flags & kZmtpFlagLong) {
      if (buffer_.size() - off < 9) break;
      size = util::get_u64be(buffer_.data() + off + 1);
      header = 9;
    } else {
      size = buffer_[off + 1];
      header = 2;
    }
    if (size > max_body_) {
      throw CodecError("zmtp frame: body length " + std::to_string(size) +
                       " exceeds maximum " + std::to_string(max_body_));
    }
    if (buffer_.size() - off < header + size) break;
    ZmtpFrame frame;
    frame.flags = flags & ~kZmtpFlagLong;  // size encoding is not semantic
    frame.body.assign(buffer_.begin() + off + header, buffer_.begin() + off + header + size);
    ready_.push_back(std::move(frame));
    off += header + size;
  }
  if (off > 0) buffer_.erase(buffer_.begin(), buffer_.begin() + off);
}

std::optional<ZmtpFrame> ZmtpFrameParser::next() {
  if (ready_.empty()) return std::nullopt;
  ZmtpFrame f = std::move(ready_.front());
  ready_.pop_front();
  return f;
}

Bytes zmtp_ready_body(const std::string& socket_type) {
  Bytes body;
  body.push_back(5);
  body.insert(body.end(), {'R', 'E', 'A', 'D', 'Y'});
  const std::string key = "Socket-Type";
  body.push_back(static_cast<uint8_t>(key.size()));
  body.insert(body.end(), key.begin(), key.end());
  util::put_u32be(body, static_cast<uint32_t>(socket_type.size()));
  body.insert(body.end(), socket_type.begin(), socket_type.end());
  return body;
}

std::string zmtp_parse_ready_socket_type(const ZmtpFrame& frame) {
  if (!frame.is_command()) throw BrokerError("zmtp ready: not a command frame");
  const Bytes& b = frame.body;
  if (b.empty() || b[0] != 5 || b.size() < 6 || std::memcmp(b.data() + 1, "READY", 5) != 0) {
    throw BrokerError("zmtp ready: command name is not READY");
  }
  size_t off = 6;
  while (off < b.size()) {
    const uint8_t key_len = b[off++];
    if (b.size() - off < key_len) throw BrokerError("zmtp ready: truncated metadata key");
    const std::string key(reinterpret_cast<const char*>(b.data()) + off, key_len);
    off += key_len;
    if (b.size() - off < 4) throw BrokerError("zmtp ready: truncated metadata value length");
    const uint32_t val_len = util::get_u32be(b.data() + off);
    off += 4;
    if (b.size() - off < val_len) throw BrokerError("zmtp ready: truncated metadata value");
    if (key == "Socket-Type") {
      return std::string(reinterpret_cast<const char*>(b.data()) + off, val_len);
    }
    off += val_len;
  }
  throw BrokerError("zmtp ready: missing Socket-Type metadata");
}

Bytes zmtp_subscribe_body(const std::string& prefix) {
  Bytes body;
  body.push_back(0x01);
  body.insert(body.end(), prefix.begin(), prefix.end());
  return body;
}

}  // namespace fedcomm::broker
