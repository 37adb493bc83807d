#pragma once

#include <cstdint>
#include <vector>

#include "fedcomm/util/bytes.hpp"

namespace fedcomm::codec {

// Largest float count decode_params will accept (1 GiB of payload data).
inline constexpr uint32_t kMaxParamCount = 1u << 28;

// Layout: [u32be float count][count x f32be][zero padding].
// inflate_to == 0 means no padding; otherwise the output is exactly
// inflate_to bytes long and must fit the data section.
Bytes encode_params(const std::vector<float>& params, size_t inflate_to);

// Inverse of encode_params; padding bytes are ignored. A zero-filled body
// (e.g. after a lost leading chunk) decodes to an empty vector; the caller
// decides what a wrong-length vector means.
std::vector<float> decode_params(ByteSpan bytes);

// Serialized size before inflation.
inline size_t encoded_params_size(size_t count) { return 4 + 4 * count; }

}  // namespace fedcomm::codec
