#include "fedcomm/codec/params.hpp"

#include "fedcomm/errors.hpp"

namespace fedcomm::codec {

Bytes encode_params(const std::vector<float>& params, size_t inflate_to) {
  const size_t data_len = encoded_params_size(params.size());
  if (inflate_to != 0 && inflate_to < data_len) {
    throw CodecError("encode_params: inflate_to " + std::to_string(inflate_to) +
                     " smaller than data section " + std::to_string(data_len));
  }
  Bytes out;
  out.reserve(inflate_to == 0 ? data_len : inflate_to);
  util::put_u32be(out, static_cast<uint32_t>(params.size()));
  for (float f : params) util::put_f32be(out, f);
  if (inflate_to > data_len) out.resize(inflate_to, 0);
  return out;
}

std::vector<float> decode_params(ByteSpan bytes) {
  if (bytes.size() < 4) {
    throw CodecError("decode_params: truncated, no count field");
  }
  const uint32_t count = util::get_u32be(bytes.data());
  if (count > kMaxParamCount) {
    throw CodecError("decode_params: declared count " + std::to_string(count) +
                     " exceeds maximum " + std::to_string(kMaxParamCount));
  }
  const size_t need = encoded_params_size(count);
  if (bytes.size() < need) {
    throw CodecError("decode_params: truncated, declared " + std::to_string(count) +
                     " floats but only " + std::to_string(bytes.size()) + " bytes");
  }
  std::vector<float> out(count);
  const uint8_t* p = bytes.data() + 4;
  for (uint32_t i = 0; i < count; ++i, p += 4) out[i] = util::get_f32be(p);
  return out;
}

}  // namespace fedcomm::codec
