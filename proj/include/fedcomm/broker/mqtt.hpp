#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedcomm/util/bytes.hpp"

namespace fedcomm::broker {

inline constexpr uint64_t kMqttMaxRemainingLength = 268'435'455;  // 0xFFFFFF7F
inline constexpr size_t kMqttMaxAccepted = 256ull * 1024 * 1024;

enum class MqttType : uint8_t {
  connect = 1,
  connack = 2,
  publish = 3,
  subscribe = 8,
  suback = 9,
  pingreq = 12,
  pingresp = 13,
  disconnect = 14,
};

// One decoded packet of the MQTT 3.1.1 subset (QoS 0, clean session, no
// retained messages/wills/auth). Fields are per-type; unused ones stay at
// their defaults.
struct MqttPacket {
  MqttType type = MqttType::pingreq;
  std::string client_id;                // connect
  uint8_t session_present = 0;          // connack
  uint8_t return_code = 0;              // connack
  std::string topic;                    // publish
  Bytes payload;                        // publish
  uint16_t packet_id = 0;               // subscribe / suback
  std::vector<std::string> topics;      // subscribe
  std::vector<uint8_t> granted;         // suback

  bool operator==(const MqttPacket&) const = default;
};

// Base-128 varint, low 7 bits per byte, continuation bit on all but the last.
Bytes mqtt_encode_remaining_length(uint64_t n);
// Returns (value, bytes consumed) or nullopt when more bytes are needed.
std::optional<std::pair<uint64_t, size_t>> mqtt_decode_remaining_length(ByteSpan bytes);

Bytes encode_mqtt(const MqttPacket& packet);

// Exact wire size of a QoS-0 PUBLISH for timing/byte accounting.
size_t mqtt_publish_wire_size(size_t topic_len, size_t payload_len);

struct DecodedMqtt {
  MqttPacket packet;
  size_t wire_size = 0;
};

// Incremental decoder; one instance per connection.
class MqttDecoder {
 public:
  explicit MqttDecoder(size_t max_remaining = kMqttMaxAccepted) : max_remaining_(max_remaining) {}
  void feed(ByteSpan bytes);
  std::optional<DecodedMqtt> next();

 private:
  size_t max_remaining_;
  Bytes buffer_;
  std::vector<DecodedMqtt> ready_;
  void parse_buffer();
};

// Exact match plus trailing multi-level '#': "a/b/#" matches "a/b" and
// anything under "a/b/". '+' is not supported.
bool mqtt_topic_matches(const std::string& filter, const std::string& topic);

// Packet-level broker state machine. I/O-free: callers feed decoded packets
// and write out the returned responses. Throws BrokerError on protocol
// violations, after which the connection must be closed.
class MqttBroker {
 public:
  struct Response {
    int conn;
    MqttPacket packet;
  };

  std::vector<Response> step(int conn, const MqttPacket& packet);
  void on_disconnect(int conn);

  size_t session_count() const { return sessions_.size(); }
  std::vector<std::string> subscriptions(int conn) const;

 private:
  struct Session {
    std::string client_id;
    std::vector<std::string> filters;
  };
  std::map<int, Session> sessions_;
};

}  // namespace fedcomm::broker
