#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedcomm/util/bytes.hpp"

namespace fedcomm::broker {

// Simplified fan-out-exchange broker framing (not AMQP 0-9-1 compatible):
// [1B type][u32be body length][body]. Names are 1-byte length-prefixed UTF-8.
enum class FanoutType : uint8_t {
  error = 0x00,
  declare_exchange = 0x01,
  declare_queue = 0x02,
  bind = 0x03,
  publish = 0x04,
  deliver = 0x05,
  consume = 0x06,
};

inline constexpr size_t kFanoutMaxBody = 256ull * 1024 * 1024;
inline constexpr size_t kFanoutHeader = 5;
inline constexpr uint8_t kExchangeKindFanout = 0x01;

enum class FanoutErrorCode : uint8_t {
  unknown_exchange = 0x01,
  unknown_queue = 0x02,
  consumer_conflict = 0x03,
};

struct FanoutFrame {
  FanoutType type = FanoutType::publish;
  Bytes body;

  bool operator==(const FanoutFrame&) const = default;
};

Bytes encode_fanout_frame(const FanoutFrame& frame);

class FanoutFrameParser {
 public:
  explicit FanoutFrameParser(size_t max_body = kFanoutMaxBody) : max_body_(max_body) {}
  void feed(ByteSpan bytes);
  std::optional<FanoutFrame> next();

 private:
  size_t max_body_;
  Bytes buffer_;
  std::deque<FanoutFrame> ready_;
};

// Frame constructors / body accessors.
FanoutFrame fanout_declare_exchange(const std::string& name);
FanoutFrame fanout_declare_queue(const std::string& name);
FanoutFrame fanout_bind(const std::string& exchange, const std::string& queue);
FanoutFrame fanout_publish(const std::string& target, ByteSpan payload);
FanoutFrame fanout_consume(const std::string& queue);
FanoutFrame fanout_deliver(const std::string& queue, ByteSpan payload);
FanoutFrame fanout_error(FanoutErrorCode code, const std::string& message);

struct FanoutPublishView {
  std::string target;
  ByteSpan payload;
};
struct FanoutDeliverView {
  std::string queue;
  ByteSpan payload;
};
FanoutPublishView fanout_parse_publish(const FanoutFrame& frame);
FanoutDeliverView fanout_parse_deliver(const FanoutFrame& frame);

size_t fanout_deliver_wire_size(size_t queue_name_len, size_t payload_len);
size_t fanout_publish_wire_size(size_t target_len, size_t payload_len);

// Fan-out broker state machine: a PUBLISH to an exchange enqueues one copy
// per bound queue; queues with a consumer drain immediately in FIFO order.
// PUBLISH to a bare queue name enqueues directly (default-exchange style).
class FanoutBroker {
 public:
  struct Delivery {
    int conn;
    FanoutFrame frame;
  };

  std::vector<Delivery> step(int conn, const FanoutFrame& frame);
  void on_disconnect(int conn);

  bool has_exchange(const std::string& name) const { return exchanges_.count(name) > 0; }
  bool has_queue(const std::string& name) const { return queues_.count(name) > 0; }
  size_t queue_depth(const std::string& name) const;
  size_t binding_count(const std::string& exchange) const;

 private:
  void drain(const std::string& queue, std::vector<Delivery>& out);

  std::map<std::string, uint8_t> exchanges_;
  std::map<std::string, std::deque<Bytes>> queues_;
  std::set<std::pair<std::string, std::string>> bindings_;  // (exchange, queue)
  std::map<std::string, int> consumers_;                    // queue -> connection
};

}  // namespace fedcomm::broker
