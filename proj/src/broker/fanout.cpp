#include "fedcomm/broker/fanout.hpp"

#include "fedcomm/errors.hpp"

namespace fedcomm::broker {

namespace {

void put_name(Bytes& out, const std::string& name) {
  if (name.empty() || name.size() > 255) {
    throw CodecError("fanout: name must be 1..255 bytes");
  }
  out.push_back(static_cast<uint8_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
}

std::string get_name(ByteSpan body, size_t& off) {
  if (off >= body.size()) throw CodecError("fanout: truncated name length");
  const uint8_t len = body[off++];
  if (len == 0) throw CodecError("fanout: empty name");
  if (body.size() - off < len) throw CodecError("fanout: truncated name");
  std::string name(reinterpret_cast<const char*>(body.data()) + off, len);
  off += len;
  return name;
}

}  // namespace

Bytes encode_fanout_frame(const FanoutFrame& frame) {
  if (frame.body.size() > kFanoutMaxBody) throw CodecError("fanout: body exceeds maximum");
  Bytes out;
  out.reserve(kFanoutHeader + frame.body.size());
  out.push_back(static_cast<uint8_t>(frame.type));
  util::put_u32be(out, static_cast<uint32_t>(frame.body.size()));
  out.insert(out.end(), frame.body.begin(), frame.body.end());
  return out;
}

void FanoutFrameParser::feed(ByteSpan bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  size_t off = 0;
  while (buffer_.size() - off >= kFanoutHeader) {
    const uint8_t type = buffer_[off];
    if (type > static_cast<uint8_t>(FanoutType::consume)) {
      throw CodecError("fanout: unknown frame type " + std::to_string(type));
    }
    const uint32_t len = util::get_u32be(buffer_.data() + off + 1);
    if (len > max_body_) {
      throw CodecError("fanout: body length " + std::to_string(len) + " exceeds maximum " +
                       std::to_string(max_body_));
    }
    if (buffer_.size() - off < kFanoutHeader + uint64_t(len)) break;
    FanoutFrame frame;
    frame.type = static_cast<FanoutType>(type);
    frame.body.assign(buffer_.begin() + off + kFanoutHeader,
                      buffer_.begin() + off + kFanoutHeader + len);
    ready_.push_back(std::move(frame));
    off += kFanoutHeader + len;
  }
  if (off > 0) buffer_.erase(buffer_.begin(), buffer_.begin() + off);
}

std::optional<FanoutFrame> FanoutFrameParser::next() {
  if (ready_.empty()) return std::nullopt;
  FanoutFrame f = std::move(ready_.front());
  ready_.pop_front();
  return f;
}

FanoutFrame fanout_declare_exchange(const std::string& name) {
  FanoutFrame f;
  f.type = FanoutType::declare_exchange;
  put_name(f.body, name);
  f.body.push_back(kExchangeKindFanout);
  return f;
}

FanoutFrame fanout_declare_queue(const std::string& name) {
  FanoutFrame f;
  f.type = FanoutType::declare_queue;
  put_name(f.body, name);
  return f;
}

FanoutFrame fanout_bind(const std::string& exchange, const std::string& queue) {
  FanoutFrame f;
  f.type = FanoutType::bind;
  put_name(f.body, exchange);
  put_name(f.body, queue);
  return f;
}

FanoutFrame fanout_publish(const std::string& target, ByteSpan payload) {
  FanoutFrame f;
  f.type = FanoutType::publish;
  put_name(f.body, target);
  f.body.insert(f.body.end(), payload.begin(), payload.end());
  return f;
}

FanoutFrame fanout_consume(const std::string& queue) {
  FanoutFrame f;
  f.type = FanoutType::consume;
  put_name(f.body, queue);
  return f;
}

FanoutFrame fanout_deliver(const std::string& queue, ByteSpan payload) {
  FanoutFrame f;
  f.type = FanoutType::deliver;
  put_name(f.body, queue);
  f.body.insert(f.body.end(), payload.begin(), payload.end());
  return f;
}

FanoutFrame fanout_error(FanoutErrorCode code, const std::string& message) {
  FanoutFrame f;
  f.type = FanoutType::error;
  f.body.push_back(static_cast<uint8_t>(code));
  f.body.insert(f.body.end(), message.begin(), message.end());
  return f;
}

FanoutPublishView fanout_parse_publish(const FanoutFrame& frame) {
  if (frame.type != FanoutType::publish) throw CodecError("fanout: not a publish frame");
  size_t off = 0;
  FanoutPublishView v;
  v.target = get_name(frame.body, off);
  v.payload = ByteSpan(frame.body.data() + off, frame.body.size() - off);
  return v;
}

FanoutDeliverView fanout_parse_deliver(const FanoutFrame& frame) {
  if (frame.type != FanoutType::deliver) throw CodecError("fanout: not a deliver frame");
  size_t off = 0;
  FanoutDeliverView v;
  v.queue = get_name(frame.body, off);
  v.payload = ByteSpan(frame.body.data() + off, frame.body.size() - off);
  return v;
}

size_t fanout_deliver_wire_size(size_t queue_name_len, size_t payload_len) {
  return kFanoutHeader + 1 + queue_name_len + payload_len;
}

size_t fanout_publish_wire_size(size_t target_len, size_t payload_len) {
  return kFanoutHeader + 1 + target_len + payload_len;
}

std::vector<FanoutBroker::Delivery> FanoutBroker::step(int conn, const FanoutFrame& frame) {
  std::vector<Delivery> out;
  size_t off = 0;
  switch (frame.type) {
    case FanoutType::declare_exchange: {
      const std::string name = get_name(frame.body, off);
      if (off >= frame.body.size()) throw CodecError("fanout: declare_exchange missing kind");
      exchanges_.emplace(name, frame.body[off]);  // idempotent
      break;
    }
    case FanoutType::declare_queue: {
      const std::string name = get_name(frame.body, off);
      queues_.try_emplace(name);  // idempotent
      break;
    }
    case FanoutType::bind: {
      const std::string exchange = get_name(frame.body, off);
      const std::string queue = get_name(frame.body, off);
      if (!exchanges_.count(exchange)) {
        out.push_back(Delivery{conn, fanout_error(FanoutErrorCode::unknown_exchange,
                                                  "bind: unknown exchange " + exchange)});
        break;
      }
      if (!queues_.count(queue)) {
        out.push_back(Delivery{conn, fanout_error(FanoutErrorCode::unknown_queue,
                                                  "bind: unknown queue " + queue)});
        break;
      }
      bindings_.emplace(exchange, queue);
      break;
    }
    case FanoutType::publish: {
      const auto view = fanout_parse_publish(frame);
      if (exchanges_.count(view.target)) {
        // One enqueued copy per bound queue, ordered by queue name.
        for (const auto& [exchange, queue] : bindings_) {
          if (exchange != view.target) continue;
          queues_[queue].emplace_back(view.payload.begin(), view.payload.end());
          drain(queue, out);
        }
      } else if (queues_.count(view.target)) {
        queues_[view.target].emplace_back(view.payload.begin(), view.payload.end());
        drain(view.target, out);
      } else {
        out.push_back(Delivery{conn, fanout_error(FanoutErrorCode::unknown_exchange,
                                                  "publish: unknown target " + view.target)});
      }
      break;
    }
    case FanoutType::consume: {
      const std::string queue = get_name(frame.body, off);
      if (!queues_.count(queue)) {
        out.push_back(Delivery{conn, fanout_error(FanoutErrorCode::unknown_queue,
                                                  "consume: unknown queue " + queue)});
        break;
      }
      const auto [it, inserted] = consumers_.emplace(queue, conn);
      if (!inserted && it->second != conn) {
        out.push_back(Delivery{conn, fanout_error(FanoutErrorCode::consumer_conflict,
                                                  "consume: queue " + queue +
                                                  " already has a consumer")});
        break;
      }
      drain(queue, out);
      break;
    }
    case FanoutType::deliver:
    case FanoutType::error:
      throw BrokerError("fanout broker: client-bound frame type received");
  }
  return out;
}

void FanoutBroker::drain(const std::string& queue, std::vector<Delivery>& out) {
  const auto consumer = consumers_.find(queue);
  if (consumer == consumers_.end()) return;
  auto& backlog = queues_[queue];
  while (!backlog.empty()) {
    out.push_back(Delivery{consumer->second, fanout_deliver(queue, backlog.front())});
    backlog.pop_front();
  }
}

void FanoutBroker::on_disconnect(int conn) {
  for (auto it = consumers_.begin(); it != consumers_.end();) {
    if (it->second == conn) {
      it = consumers_.erase(it);
    } else {
      ++it;
    }
  }
}

size_t FanoutBroker::queue_depth(const std::string& name) const {
  const auto it = queues_.find(name);
  return it == queues_.end() ? 0 : it->second.size();
}

size_t FanoutBroker::binding_count(const std::string& exchange) const {
  size_t n = 0;
  for (const auto& [ex, q] : bindings_) {
    if (ex == exchange) ++n;
  }
  return n;
}

}  // namespace fedcomm::broker
