#include <chrono>

#include "fedcomm/errors.hpp"
#include "internal.hpp"

namespace fedcomm::transport {

namespace {

// Parses frames off one stream into an inbox until EOF.
void reader_loop(net::ByteStream& stream, util::BlockingQueue<codec::WireMessage>& inbox) {
  codec::StreamParser parser;
  uint8_t buf[64 * 1024];
  try {
    for (;;) {
      const size_t n = stream.recv_some(buf, sizeof(buf), -1.0);
      if (n == 0) break;
      parser.feed(ByteSpan(buf, n));
      while (auto msg = parser.next()) inbox.push(std::move(*msg));
    }
  } catch (const Error&) {
    // Malformed bytes or a torn connection surface as a closed inbox.
  }
  inbox.close();
}

}  // namespace

TcpServerEndpoint::TcpServerEndpoint(RunContext& ctx, std::vector<net::StreamPtr> streams,
                                     LivenessCheck liveness)
    : ctx_(ctx), streams_(std::move(streams)), liveness_(std::move(liveness)) {
  for (size_t id = 0; id < streams_.size(); ++id) {
    inbox_.push_back(std::make_unique<util::BlockingQueue<codec::WireMessage>>());
    readers_.emplace_back(
        [this, id] { reader_loop(*streams_[id], *inbox_[id]); });
  }
}

TcpServerEndpoint::~TcpServerEndpoint() {
  for (auto& s : streams_) s->close();
  for (auto& r : readers_) r.join();
}

void TcpServerEndpoint::broadcast_global(uint16_t round, const Bytes& payload) {
  codec::WireMessage msg;
  msg.kind = codec::MsgKind::global_model;
  msg.round = round;
  msg.sender_id = 0;
  msg.payload = payload;
  const Bytes frame = codec::frame_stream_message(msg);

  // One message per device, written sequentially in ascending id order; the
  // next send starts when the previous transfer completed.
  double t = ctx_.server_cursor;
  for (uint16_t id = 0; id < streams_.size(); ++id) {
    const double start = t;
    const double wire_start = start + ctx_.serialize_delay(frame.size());
    const auto res = ctx_.link(id).down.stream_transfer(frame.size(), wire_start);
    record_event(ctx_, id, round, metrics::Direction::down, frame.size(), start, res.end,
                 res.retransmissions, 0);
    streams_[id]->send(frame);
    ctx_.device_cursor[id] = std::max(ctx_.device_cursor[id], res.end);
    t = res.end;
  }
  ctx_.server_cursor = t;
  ctx_.clock->wait_until(t);
}

std::vector<CollectedUpdate> TcpServerEndpoint::collect_updates(uint16_t round, size_t expected,
                                                                double timeout_s) {
  if (expected > streams_.size()) {
    throw TransportError("collect_updates: expected more devices than connected");
  }
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_s));
  std::vector<CollectedUpdate> out;
  double phase_end = ctx_.server_cursor;
  for (uint16_t id = 0; id < expected; ++id) {
    std::optional<codec::WireMessage> msg;
    for (;;) {
      const double remain =
          std::chrono::duration<double>(deadline - std::chrono::steady_clock::now()).count();
      if (remain <= 0) {
        throw TransportError("collect phase timeout: no update from device " +
                             std::to_string(id) + " in round " + std::to_string(round));
      }
      msg = inbox_[id]->pop_for(std::min(remain, 0.2));
      if (msg) break;
      if (inbox_[id]->closed()) {
        throw TransportError("device " + std::to_string(id) + " disconnected in round " +
                             std::to_string(round) + " (collect phase)");
      }
      if (liveness_) {
        if (auto dead = liveness_()) {
          throw TransportError("device " + std::to_string(*dead) + " disconnected in round " +
                               std::to_string(round) + " (collect phase)");
        }
      }
    }
    if (msg->kind != codec::MsgKind::client_update || msg->round != round) {
      throw TransportError("collect phase: unexpected message from device " +
                           std::to_string(id) + " (kind " +
                           std::to_string(int(msg->kind)) + ", round " +
                           std::to_string(msg->round) + ")");
    }
    const uint64_t bytes = codec::framed_size(msg->payload.size());
    const double start = ctx_.device_cursor[id];
    const double wire_start = start + ctx_.serialize_delay(bytes);
    const auto res = ctx_.link(id).up.stream_transfer(bytes, wire_start);
    record_event(ctx_, id, round, metrics::Direction::up, bytes, start, res.end,
                 res.retransmissions, 0);
    ctx_.device_cursor[id] = res.end;
    phase_end = std::max(phase_end, res.end);
    out.push_back(CollectedUpdate{id, std::move(msg->payload), 0});
  }
  ctx_.server_cursor = phase_end;
  ctx_.clock->wait_until(phase_end);
  return out;
}

void TcpServerEndpoint::shutdown() {
  codec::WireMessage msg;
  msg.kind = codec::MsgKind::end;
  msg.round = kShutdownRound;
  const Bytes frame = codec::frame_stream_message(msg);
  for (auto& s : streams_) s->send(frame);
}

TcpDeviceEndpoint::TcpDeviceEndpoint(net::StreamPtr stream, uint16_t device_id)
    : stream_(std::move(stream)), device_id_(device_id) {}

DownMessage TcpDeviceEndpoint::receive_global(double timeout_s) {
  uint8_t buf[64 * 1024];
  for (;;) {
    if (auto msg = parser_.next()) {
      if (msg->kind == codec::MsgKind::end && msg->round == kShutdownRound) {
        return DownMessage{true, 0, {}, 0};
      }
      if (msg->kind == codec::MsgKind::global_model) {
        return DownMessage{false, msg->round, std::move(msg->payload), 0};
      }
      continue;  // unrelated frame kinds are not expected mid-run
    }
    const size_t n = stream_->recv_some(buf, sizeof(buf), timeout_s);
    if (n == 0) throw TransportError("device " + std::to_string(device_id_) +
                                     ": stream closed while awaiting broadcast");
    parser_.feed(ByteSpan(buf, n));
  }
}

void TcpDeviceEndpoint::send_update(uint16_t round, const Bytes& payload) {
  codec::WireMessage msg;
  msg.kind = codec::MsgKind::client_update;
  msg.round = round;
  msg.sender_id = device_id_;
  msg.payload = payload;
  stream_->send(codec::frame_stream_message(msg));
}

InProcessDeployment make_inprocess_tcp(size_t n, RunContext& ctx) {
  std::vector<net::StreamPtr> server_side;
  std::vector<std::shared_ptr<DeviceEndpoint>> devices;
  for (uint16_t id = 0; id < n; ++id) {
    auto [a, b] = net::make_memory_stream_pair();
    server_side.push_back(a);
    devices.push_back(std::make_shared<TcpDeviceEndpoint>(b, id));
  }
  model_protocol_setup(TransportKind::tcp, n, ctx);
  InProcessDeployment dep;
  dep.server = std::make_unique<TcpServerEndpoint>(ctx, std::move(server_side));
  dep.devices = std::move(devices);
  return dep;
}

}  // namespace fedcomm::transport
