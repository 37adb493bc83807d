#include "fedcomm/broker/mqtt.hpp"

#include <algorithm>

#include "fedcomm/errors.hpp"

namespace fedcomm::broker {

Bytes mqtt_encode_remaining_length(uint64_t n) {
  if (n > kMqttMaxRemainingLength) {
    throw CodecError("mqtt remaining length " + std::to_string(n) + " exceeds maximum " +
                     std::to_string(kMqttMaxRemainingLength));
  }
  Bytes out;
  do {
    uint8_t digit = n % 128;
    n /= 128;
    if (n > 0) digit |= 0x80;
    out.push_back(digit);
  } while (n > 0);
  return out;
}

std::optional<std::pair<uint64_t, size_t>> mqtt_decode_remaining_length(ByteSpan bytes) {
  uint64_t value = 0;
  uint64_t multiplier = 1;
  for (size_t i = 0; i < bytes.size(); ++i) {
    if (i >= 4) {
      throw CodecError("mqtt remaining length: malformed, continuation past 4 bytes");
    }
    value += uint64_t(bytes[i] & 0x7F) * multiplier;
    if ((bytes[i] & 0x80) == 0) return std::make_pair(value, i + 1);
    multiplier *= 128;
  }
  if (bytes.size() >= 4) {
    throw CodecError("mqtt remaining length: malformed, continuation past 4 bytes");
  }
  return std::nullopt;
}

namespace {

void put_mqtt_string(Bytes& out, const std::string& s) {
  if (s.size() > 0xFFFF) throw CodecError("mqtt string too long");
  util::put_u16be(out, static_cast<uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

std::string get_mqtt_string(ByteSpan body, size_t& off) {
  if (body.size() - off < 2) throw CodecError("mqtt: truncated string length");
  const uint16_t len = util::get_u16be(body.data() + off);
  off += 2;
  if (body.size() - off < len) throw CodecError("mqtt: truncated string body");
  std::string s(reinterpret_cast<const char*>(body.data()) + off, len);
  off += len;
  return s;
}

constexpr uint8_t kConnectFlagsCleanSession = 0x02;

}  // namespace

size_t mqtt_publish_wire_size(size_t topic_len, size_t payload_len) {
  const size_t remaining = 2 + topic_len + payload_len;
  return 1 + mqtt_encode_remaining_length(remaining).size() + remaining;
}

Bytes encode_mqtt(const MqttPacket& packet) {
  Bytes body;
  uint8_t fixed = 0;
  switch (packet.type) {
    case MqttType::connect: {
      fixed = 0x10;
      put_mqtt_string(body, "MQTT");
      body.push_back(0x04);  // protocol level 3.1.1
      body.push_back(kConnectFlagsCleanSession);
      util::put_u16be(body, 0);  // keepalive unused at desk scale
      put_mqtt_string(body, packet.client_id);
      break;
    }
    case MqttType::connack: {
      fixed = 0x20;
      body.push_back(packet.session_present);
      body.push_back(packet.return_code);
      break;
    }
    case MqttType::publish: {
      fixed = 0x30;  // QoS 0, no dup, no retain
      put_mqtt_string(body, packet.topic);
      body.insert(body.end(), packet.payload.begin(), packet.payload.end());
      break;
    }
    case MqttType::subscribe: {
      fixed = 0x82;  // reserved flags 0b0010
      if (packet.topics.empty()) throw CodecError("mqtt subscribe: no topic filters");
      util::put_u16be(body, packet.packet_id);
      for (const auto& t : packet.topics) {
        put_mqtt_string(body, t);
        body.push_back(0x00);  // requested QoS 0
      }
      break;
    }
    case MqttType::suback: {
      fixed = 0x90;
      util::put_u16be(body, packet.packet_id);
      body.insert(body.end(), packet.granted.begin(), packet.granted.end());
      break;
    }
    case MqttType::pingreq:
      fixed = 0xC0;
      break;
    case MqttType::pingresp:
      fixed = 0xD0;
      break;
    case MqttType::disconnect:
      fixed = 0xE0;
      break;
  }
  Bytes out;
  out.push_back(fixed);
  const Bytes rl = mqtt_encode_remaining_length(body.size());
  out.insert(out.end(), rl.begin(), rl.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void MqttDecoder::feed(ByteSpan bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  parse_buffer();
}

void MqttDecoder::parse_buffer() {
  size_t off = 0;
  while (buffer_.size() - off >= 2) {
    const uint8_t fixed = buffer_[off];
    const auto rl = mqtt_decode_remaining_length(
        ByteSpan(buffer_.data() + off + 1, buffer_.size() - off - 1));
    if (!rl) break;
    const auto [remaining, rl_bytes] = *rl;
    if (remaining > max_remaining_) {
      throw CodecError("mqtt: remaining length " + std::to_string(remaining) +
                       " exceeds accepted maximum " + std::to_string(max_remaining_));
    }
    const size_t total = 1 + rl_bytes + remaining;
    if (buffer_.size() - off < total) break;
    const ByteSpan body(buffer_.data() + off + 1 + rl_bytes, remaining);
    const uint8_t type_code = fixed >> 4;
    const uint8_t flags = fixed & 0x0F;
    MqttPacket pkt;
    size_t pos = 0;
    switch (type_code) {
      case 1: {  // CONNECT
        pkt.type = MqttType::connect;
        if (flags != 0) throw CodecError("mqtt connect: nonzero fixed-header flags");
        const std::string proto = get_mqtt_string(body, pos);
        if (proto != "MQTT") throw CodecError("mqtt connect: protocol name '" + proto + "'");
        if (body.size() - pos < 4) throw CodecError("mqtt connect: truncated variable header");
        const uint8_t level = body[pos++];
        if (level != 0x04) {
          throw CodecError("mqtt connect: unsupported protocol level " + std::to_string(level));
        }
        const uint8_t connect_flags = body[pos++];
        if ((connect_flags & ~kConnectFlagsCleanSession) != 0) {
          throw CodecError("mqtt connect: unsupported connect flags (wills/auth not in subset)");
        }
        pos += 2;  // keepalive
        pkt.client_id = get_mqtt_string(body, pos);
        break;
      }
      case 2: {  // CONNACK
        pkt.type = MqttType::connack;
        if (body.size() != 2) throw CodecError("mqtt connack: body must be 2 bytes");
        pkt.session_present = body[0];
        pkt.return_code = body[1];
        pos = 2;
        break;
      }
      case 3: {  // PUBLISH
        pkt.type = MqttType::publish;
        if (flags != 0) {
          throw CodecError("mqtt publish: QoS>0 / dup / retain not in subset");
        }
        pkt.topic = get_mqtt_string(body, pos);
        pkt.payload.assign(body.begin() + pos, body.end());
        pos = body.size();
        break;
      }
      case 8: {  // SUBSCRIBE
        pkt.type = MqttType::subscribe;
        if (flags != 0x02) throw CodecError("mqtt subscribe: fixed-header flags must be 0010");
        if (body.size() < 2) throw CodecError("mqtt subscribe: truncated packet id");
        pkt.packet_id = util::get_u16be(body.data());
        pos = 2;
        while (pos < body.size()) {
          pkt.topics.push_back(get_mqtt_string(body, pos));
          if (pos >= body.size()) throw CodecError("mqtt subscribe: missing QoS byte");
          const uint8_t qos = body[pos++];
          if (qos != 0) throw CodecError("mqtt subscribe: QoS " + std::to_string(qos) +
                                         " not in subset");
        }
        if (pkt.topics.empty()) throw CodecError("mqtt subscribe: no topic filters");
        break;
      }
      case 9: {  // SUBACK
        pkt.type = MqttType::suback;
        if (body.size() < 2) throw CodecError("mqtt suback: truncated packet id");
        pkt.packet_id = util::get_u16be(body.data());
        pkt.granted.assign(body.begin() + 2, body.end());
        pos = body.size();
        break;
      }
      case 12:
        pkt.type = MqttType::pingreq;
        if (!body.empty()) throw CodecError("mqtt pingreq: nonempty body");
        break;
      case 13:
        pkt.type = MqttType::pingresp;
        if (!body.empty()) throw CodecError("mqtt pingresp: nonempty body");
        break;
      case 14:
        pkt.type = MqttType::disconnect;
        if (!body.empty()) throw CodecError("mqtt disconnect: nonempty body");
        break;
      default:
        throw CodecError("mqtt: packet type " + std::to_string(type_code) + " not in subset");
    }
    ready_.push_back(DecodedMqtt{std::move(pkt), total});
    off += total;
  }
  if (off > 0) buffer_.erase(buffer_.begin(), buffer_.begin() + off);
}

std::optional<DecodedMqtt> MqttDecoder::next() {
  if (ready_.empty()) return std::nullopt;
  DecodedMqtt d = std::move(ready_.front());
  ready_.erase(ready_.begin());
  return d;
}

bool mqtt_topic_matches(const std::string& filter, const std::string& topic) {
  if (filter == "#") return true;
  if (filter.size() >= 2 && filter.ends_with("/#")) {
    const std::string prefix = filter.substr(0, filter.size() - 2);
    if (topic == prefix) return true;
    return topic.size() > prefix.size() && topic.compare(0, prefix.size(), prefix) == 0 &&
           topic[prefix.size()] == '/';
  }
  return filter == topic;
}

std::vector<MqttBroker::Response> MqttBroker::step(int conn, const MqttPacket& packet) {
  std::vector<Response> out;
  const auto it = sessions_.find(conn);
  if (it == sessions_.end()) {
    if (packet.type != MqttType::connect) {
      throw BrokerError("mqtt broker: packet before CONNECT on connection " +
                        std::to_string(conn));
    }
    sessions_[conn] = Session{packet.client_id, {}};
    MqttPacket ack;
    ack.type = MqttType::connack;
    ack.session_present = 0;
    ack.return_code = 0;
    out.push_back(Response{conn, std::move(ack)});
    return out;
  }

  switch (packet.type) {
    case MqttType::connect:
      throw BrokerError("mqtt broker: duplicate CONNECT on connection " + std::to_string(conn));
    case MqttType::subscribe: {
      for (const auto& t : packet.topics) it->second.filters.push_back(t);
      MqttPacket ack;
      ack.type = MqttType::suback;
      ack.packet_id = packet.packet_id;
      ack.granted.assign(packet.topics.size(), 0x00);
      out.push_back(Response{conn, std::move(ack)});
      break;
    }
    case MqttType::publish: {
      if (packet.topic.find('#') != std::string::npos ||
          packet.topic.find('+') != std::string::npos) {
        throw BrokerError("mqtt broker: PUBLISH topic contains wildcard characters");
      }
      for (const auto& [peer, session] : sessions_) {
        const bool subscribed = std::any_of(
            session.filters.begin(), session.filters.end(),
            [&](const std::string& f) { return mqtt_topic_matches(f, packet.topic); });
        if (subscribed) out.push_back(Response{peer, packet});
      }
      break;
    }
    case MqttType::pingreq: {
      MqttPacket resp;
      resp.type = MqttType::pingresp;
      out.push_back(Response{conn, std::move(resp)});
      break;
    }
    case MqttType::disconnect:
      sessions_.erase(it);
      break;
    default:
      throw BrokerError("mqtt broker: client-bound packet type received");
  }
  return out;
}

void MqttBroker::on_disconnect(int conn) { sessions_.erase(conn); }

std::vector<std::string> MqttBroker::subscriptions(int conn) const {
  const auto it = sessions_.find(conn);
  if (it == sessions_.end()) return {};
  return it->second.filters;
}

}  // namespace fedcomm::broker
