#include "fedcomm/util/bytes.hpp"

#include "fedcomm/errors.hpp"

namespace fedcomm::util {

static const char* kHexDigits = "0123456789abcdef";

std::string to_hex(ByteSpan data) {
  std::string s;
  s.reserve(data.size() * 2);
  for (uint8_t b : data) {
    s.push_back(kHexDigits[b >> 4]);
    s.push_back(kHexDigits[b & 0xF]);
  }
  return s;
}

static int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

Bytes from_hex(const std::string& hex) {
  Bytes out;
  int hi = -1;
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\t') continue;
    int v = hex_val(c);
    if (v < 0) throw CodecError("from_hex: invalid hex character");
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<uint8_t>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) throw CodecError("from_hex: odd number of hex digits");
  return out;
}

}  // namespace fedcomm::util
