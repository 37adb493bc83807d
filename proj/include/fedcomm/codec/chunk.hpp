#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fedcomm/util/bytes.hpp"

namespace fedcomm::codec {

inline constexpr uint8_t kChunkMagic0 = 0xFE;
inline constexpr uint8_t kChunkMagic1 = 0xDC;
inline constexpr size_t kChunkHeader = 18;
inline constexpr size_t kDefaultChunkSize = 1400;
inline constexpr size_t kMinChunkSize = 64;
inline constexpr size_t kMaxChunkSize = 65507;

// One datagram of a chunked transfer.
// [0xFE 0xDC][u16be round][u32be msg_id][u32be chunk_index][u32be total_chunks]
// [u16be payload_len][payload]
struct UdpChunk {
  uint16_t round = 0;
  uint32_t msg_id = 0;
  uint32_t chunk_index = 0;
  uint32_t total_chunks = 1;
  Bytes payload;

  bool operator==(const UdpChunk&) const = default;
};

Bytes encode_chunk(const UdpChunk& chunk);
UdpChunk parse_chunk(ByteSpan bytes);

// Splits payload into ceil(len / chunk_size) chunks (an empty payload yields
// one zero-length chunk). All chunks but the last carry exactly chunk_size
// bytes.
std::vector<UdpChunk> chunk_payload(ByteSpan payload, uint16_t round, uint32_t msg_id,
                                    size_t chunk_size = kDefaultChunkSize);

// Sent over the reliable control channel once all chunks went out.
struct EndInfo {
  uint32_t msg_id = 0;
  uint32_t total_chunks = 1;
  uint64_t total_payload_len = 0;
};

Bytes encode_end_info(const EndInfo& info);
EndInfo decode_end_info(ByteSpan bytes);

struct Reassembled {
  Bytes payload;       // total_payload_len bytes; lost ranges zero-filled
  uint32_t missing = 0;  // number of absent chunk indices
};

// chunks: received chunks keyed by chunk_index (duplicates already collapsed).
Reassembled reassemble(const std::map<uint32_t, UdpChunk>& chunks, const EndInfo& end);

// Wire bytes of a whole chunked transfer (headers included, no loss).
size_t chunked_wire_size(size_t payload_len, size_t chunk_size = kDefaultChunkSize);

}  // namespace fedcomm::codec
