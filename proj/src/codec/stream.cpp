#include "fedcomm/codec/stream.hpp"

#include <cstring>

#include "fedcomm/errors.hpp"

namespace fedcomm::codec {

static bool valid_kind(uint8_t k) { return k >= 0x01 && k <= 0x04; }

Bytes frame_stream_message(const WireMessage& msg) {
  if (msg.payload.size() > uint64_t(UINT32_MAX) - 5) {
    throw CodecError("frame_stream_message: payload too large");
  }
  Bytes out;
  out.reserve(kFrameOverhead + msg.payload.size());
  util::put_u32be(out, static_cast<uint32_t>(5 + msg.payload.size()));
  out.push_back(static_cast<uint8_t>(msg.kind));
  util::put_u16be(out, msg.round);
  util::put_u16be(out, msg.sender_id);
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

void StreamParser::feed(ByteSpan bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  parse_buffer();
}

void StreamParser::parse_buffer() {
  size_t off = 0;
  while (buffer_.size() - off >= 4) {
    const uint32_t n = util::get_u32be(buffer_.data() + off);
    if (n < 5) {
      throw CodecError("parse_stream_message: declared length " + std::to_string(n) +
                       " below minimum 5");
    }
    if (uint64_t(n) > max_length_) {
      throw CodecError("parse_stream_message: declared length " + std::to_string(n) +
                       " exceeds maximum " + std::to_string(max_length_));
    }
    if (buffer_.size() - off < 4 + uint64_t(n)) break;  // incomplete frame
    const uint8_t* p = buffer_.data() + off + 4;
    if (!valid_kind(p[0])) {
      throw CodecError("parse_stream_message: unknown message kind 0x" +
                       util::to_hex(ByteSpan(p, 1)));
    }
    WireMessage msg;
    msg.kind = static_cast<MsgKind>(p[0]);
    msg.round = util::get_u16be(p + 1);
    msg.sender_id = util::get_u16be(p + 3);
    msg.payload.assign(p + 5, p + n);
    ready_.push_back(std::move(msg));
    off += 4 + n;
  }
  if (off > 0) buffer_.erase(buffer_.begin(), buffer_.begin() + off);
}

std::optional<WireMessage> StreamParser::next() {
  if (ready_.empty()) return std::nullopt;
  WireMessage msg = std::move(ready_.front());
  ready_.pop_front();
  return msg;
}

WireMessage parse_stream_message(ByteSpan bytes) {
  StreamParser parser;
  parser.feed(bytes);
  auto msg = parser.next();
  if (!msg) throw CodecError("parse_stream_message: incomplete message");
  return *msg;
}

}  // namespace fedcomm::codec
