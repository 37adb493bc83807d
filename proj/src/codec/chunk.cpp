#include "fedcomm/codec/chunk.hpp"

#include <cstring>

#include "fedcomm/errors.hpp"

namespace fedcomm::codec {

Bytes encode_chunk(const UdpChunk& chunk) {
  if (chunk.payload.size() > kMaxChunkSize) {
    throw CodecError("encode_chunk: payload exceeds datagram limit");
  }
  if (chunk.chunk_index >= chunk.total_chunks) {
    throw CodecError("encode_chunk: chunk_index >= total_chunks");
  }
  Bytes out;
  out.reserve(kChunkHeader + chunk.payload.size());
  out.push_back(kChunkMagic0);
  out.push_back(kChunkMagic1);
  util::put_u16be(out, chunk.round);
  util::put_u32be(out, chunk.msg_id);
  util::put_u32be(out, chunk.chunk_index);
  util::put_u32be(out, chunk.total_chunks);
  util::put_u16be(out, static_cast<uint16_t>(chunk.payload.size()));
  out.insert(out.end(), chunk.payload.begin(), chunk.payload.end());
  return out;
}

UdpChunk parse_chunk(ByteSpan bytes) {
  if (bytes.size() < kChunkHeader) {
    throw CodecError("parse_chunk: datagram shorter than header");
  }
  if (bytes[0] != kChunkMagic0 || bytes[1] != kChunkMagic1) {
    throw CodecError("parse_chunk: bad magic");
  }
  UdpChunk chunk;
  chunk.round = util::get_u16be(bytes.data() + 2);
  chunk.msg_id = util::get_u32be(bytes.data() + 4);
  chunk.chunk_index = util::get_u32be(bytes.data() + 8);
  chunk.total_chunks = util::get_u32be(bytes.data() + 12);
  const uint16_t payload_len = util::get_u16be(bytes.data() + 16);
  if (chunk.total_chunks == 0 || chunk.chunk_index >= chunk.total_chunks) {
    throw CodecError("parse_chunk: chunk_index " + std::to_string(chunk.chunk_index) +
                     " out of range for total_chunks " + std::to_string(chunk.total_chunks));
  }
  if (bytes.size() != kChunkHeader + payload_len) {
    throw CodecError("parse_chunk: datagram length does not match declared payload_len");
  }
  chunk.payload.assign(bytes.begin() + kChunkHeader, bytes.end());
  return chunk;
}

std::vector<UdpChunk> chunk_payload(ByteSpan payload, uint16_t round, uint32_t msg_id,
                                    size_t chunk_size) {
  if (chunk_size < kMinChunkSize || chunk_size > kMaxChunkSize) {
    throw CodecError("chunk_payload: chunk_size " + std::to_string(chunk_size) +
                     " outside [" + std::to_string(kMinChunkSize) + ", " +
                     std::to_string(kMaxChunkSize) + "]");
  }
  const size_t total = payload.empty() ? 1 : (payload.size() + chunk_size - 1) / chunk_size;
  std::vector<UdpChunk> chunks;
  chunks.reserve(total);
  for (size_t i = 0; i < total; ++i) {
    UdpChunk c;
    c.round = round;
    c.msg_id = msg_id;
    c.chunk_index = static_cast<uint32_t>(i);
    c.total_chunks = static_cast<uint32_t>(total);
    const size_t off = i * chunk_size;
    const size_t len = std::min(chunk_size, payload.size() - off);
    if (!payload.empty()) c.payload.assign(payload.begin() + off, payload.begin() + off + len);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

Bytes encode_end_info(const EndInfo& info) {
  Bytes out;
  out.reserve(16);
  util::put_u32be(out, info.msg_id);
  util::put_u32be(out, info.total_chunks);
  util::put_u64be(out, info.total_payload_len);
  return out;
}

EndInfo decode_end_info(ByteSpan bytes) {
  if (bytes.size() != 16) throw CodecError("decode_end_info: expected 16 bytes");
  EndInfo info;
  info.msg_id = util::get_u32be(bytes.data());
  info.total_chunks = util::get_u32be(bytes.data() + 4);
  info.total_payload_len = util::get_u64be(bytes.data() + 8);
  return info;
}

Reassembled reassemble(const std::map<uint32_t, UdpChunk>& chunks, const EndInfo& end) {
  Reassembled out;
  out.payload.assign(end.total_payload_len, 0);
  uint32_t present = 0;
  for (const auto& [index, chunk] : chunks) {
    if (chunk.msg_id != end.msg_id) {
      throw CodecError("reassemble: chunk msg_id " + std::to_string(chunk.msg_id) +
                       " does not match END msg_id " + std::to_string(end.msg_id));
    }
    if (chunk.total_chunks != end.total_chunks) {
      throw CodecError("reassemble: chunk total_chunks " + std::to_string(chunk.total_chunks) +
                       " inconsistent with END total_chunks " +
                       std::to_string(end.total_chunks));
    }
    if (index >= end.total_chunks) {
      throw CodecError("reassemble: chunk index out of range");
    }
    // Non-final chunks all carry the uniform chunk size, so a chunk's own
    // length fixes its offset; the final chunk sits at the tail.
    const bool final_chunk = (index == end.total_chunks - 1);
    const uint64_t off = final_chunk ? end.total_payload_len - chunk.payload.size()
                                     : uint64_t(index) * chunk.payload.size();
    if (off + chunk.payload.size() > end.total_payload_len) {
      throw CodecError("reassemble: chunk extends past declared payload length");
    }
    if (!chunk.payload.empty()) {
      std::memcpy(out.payload.data() + off, chunk.payload.data(), chunk.payload.size());
    }
    ++present;
  }
  out.missing = end.total_chunks - present;
  return out;
}

size_t chunked_wire_size(size_t payload_len, size_t chunk_size) {
  const size_t total = payload_len == 0 ? 1 : (payload_len + chunk_size - 1) / chunk_size;
  return payload_len + total * kChunkHeader;
}

}  // namespace fedcomm::codec
