#include "fedcomm/transport/transport.hpp"

#include <chrono>

#include <json.hpp>

#include "fedcomm/broker/mqtt.hpp"
#include "fedcomm/broker/zmtp.hpp"
#include "fedcomm/errors.hpp"
#include "fedcomm/net/socket.hpp"
#include "internal.hpp"

namespace fedcomm::transport {

TransportKind parse_transport_kind(const std::string& name) {
  if (name == "tcp") return TransportKind::tcp;
  if (name == "udp") return TransportKind::udp;
  if (name == "mqtt") return TransportKind::mqtt;
  if (name == "amqp") return TransportKind::amqp;
  if (name == "zmtp") return TransportKind::zmtp;
  throw ConfigError("unknown protocol '" + name + "', valid: tcp|udp|mqtt|amqp|zmtp");
}

std::string to_string(TransportKind kind) {
  switch (kind) {
    case TransportKind::tcp: return "tcp";
    case TransportKind::udp: return "udp";
    case TransportKind::mqtt: return "mqtt";
    case TransportKind::amqp: return "amqp";
    case TransportKind::zmtp: return "zmtp";
  }
  return "tcp";
}

const std::vector<std::string>& transport_names() {
  static const std::vector<std::string> names = {"tcp", "udp", "mqtt", "amqp", "zmtp"};
  return names;
}

Ports Ports::with_base(uint16_t base) {
  Ports p;
  const int32_t shift = int32_t(base) - 9000;
  p.data = uint16_t(9000 + shift);
  p.udp_control = uint16_t(9001 + shift);
  p.mqtt_broker = uint16_t(1883 + shift);
  p.fanout_broker = uint16_t(5672 + shift);
  p.zmtp_pub = uint16_t(9010 + shift);
  p.zmtp_updates = uint16_t(9011 + shift);
  return p;
}

std::string amqp_device_queue(uint16_t device_id) {
  return "fl.dev." + std::to_string(device_id);
}

std::string mqtt_global_topic(uint16_t round) { return "fl/global/" + std::to_string(round); }

std::string mqtt_update_topic(uint16_t device_id, uint16_t round) {
  return "fl/update/" + std::to_string(device_id) + "/" + std::to_string(round);
}

void record_event(RunContext& ctx, uint16_t device_id, uint16_t round,
                  metrics::Direction direction, uint64_t bytes, double start, double end,
                  uint64_t retransmissions, uint32_t missing_chunks) {
  if (!ctx.collector) return;
  metrics::CommEvent e;
  e.device_id = device_id;
  e.round = round;
  e.direction = direction;
  e.bytes = bytes;
  e.start = start;
  e.end = end;
  e.retransmissions = retransmissions;
  e.missing_chunks = missing_chunks;
  ctx.collector->record(e);
}

void write_frame(net::ByteStream& stream, const codec::WireMessage& msg) {
  stream.send(codec::frame_stream_message(msg));
}

codec::WireMessage read_frame(net::ByteStream& stream, double timeout_s) {
  codec::StreamParser parser;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_s < 0 ? 3600.0 : timeout_s));
  uint8_t buf[4096];
  for (;;) {
    if (auto msg = parser.next()) return *msg;
    const double remain =
        std::chrono::duration<double>(deadline - std::chrono::steady_clock::now()).count();
    if (remain <= 0) throw TransportError("read_frame: timed out");
    const size_t n = stream.recv_some(buf, sizeof(buf), remain);
    if (n == 0 && !parser.next()) throw TransportError("read_frame: stream closed");
    parser.feed(ByteSpan(buf, n));
  }
}

// ------------------------------------------------------------- setup model

namespace {

// Chains transfers through one device's links: each entry runs after the
// previous one completed.
double model_chain(RunContext& ctx, uint16_t id,
                   const std::vector<std::pair<metrics::Direction, size_t>>& script,
                   double start) {
  double t = start;
  for (const auto& [dir, bytes] : script) {
    auto& link = dir == metrics::Direction::down ? ctx.link(id).down : ctx.link(id).up;
    t = link.stream_transfer(bytes, t).end;
  }
  return t;
}

}  // namespace

void model_protocol_setup(TransportKind kind, size_t n_devices, RunContext& ctx) {
  using metrics::Direction;
  double setup_end = 0.0;
  for (uint16_t id = 0; id < n_devices; ++id) {
    double end = 0.0;
    switch (kind) {
      case TransportKind::tcp:
      case TransportKind::udp:
        end = 0.0;  // plain sockets: no protocol handshake bytes
        break;
      case TransportKind::mqtt: {
        broker::MqttPacket connect;
        connect.type = broker::MqttType::connect;
        connect.client_id = "fl-dev-" + std::to_string(id);
        broker::MqttPacket connack;
        connack.type = broker::MqttType::connack;
        broker::MqttPacket sub;
        sub.type = broker::MqttType::subscribe;
        sub.packet_id = 1;
        sub.topics = {"fl/global/#", kMqttCtlTopic};
        broker::MqttPacket suback;
        suback.type = broker::MqttType::suback;
        suback.packet_id = 1;
        suback.granted = {0x00, 0x00};
        end = model_chain(ctx, id,
                          {{Direction::up, encode_mqtt(connect).size()},
                           {Direction::down, encode_mqtt(connack).size()},
                           {Direction::up, encode_mqtt(sub).size()},
                           {Direction::down, encode_mqtt(suback).size()}},
                          0.0);
        break;
      }
      case TransportKind::amqp: {
        const std::string queue = amqp_device_queue(id);
        end = model_chain(
            ctx, id,
            {{Direction::up, encode_fanout_frame(broker::fanout_declare_queue(queue)).size()},
             {Direction::up,
              encode_fanout_frame(broker::fanout_bind(kAmqpGlobalExchange, queue)).size()},
             {Direction::up, encode_fanout_frame(broker::fanout_consume(queue)).size()}},
            0.0);
        break;
      }
      case TransportKind::zmtp: {
        // Greetings cross concurrently; each READY follows the peer greeting;
        // the subscription follows the completed handshake.
        auto& down = ctx.link(id).down;
        auto& up = ctx.link(id).up;
        const double g_down = down.stream_transfer(broker::kZmtpGreetingSize, 0.0).end;
        const double g_up = up.stream_transfer(broker::kZmtpGreetingSize, 0.0).end;
        const Bytes ready_down = broker::zmtp_ready_body("PUB");
        const Bytes ready_up = broker::zmtp_ready_body("SUB");
        const double r_down =
            down.stream_transfer(broker::zmtp_frame_wire_size(ready_down.size()), g_up).end;
        const double r_up =
            up.stream_transfer(broker::zmtp_frame_wire_size(ready_up.size()), g_down).end;
        const Bytes sub = broker::zmtp_subscribe_body(kZmtpTopicPrefix);
        end = up.stream_transfer(broker::zmtp_frame_wire_size(sub.size()),
                                 std::max(r_down, r_up))
                  .end;
        break;
      }
    }
    setup_end = std::max(setup_end, end);
  }
  ctx.setup_time_s = setup_end;
  ctx.server_cursor = setup_end;
  ctx.device_cursor.assign(n_devices, setup_end);
  if (ctx.clock) ctx.clock->wait_until(setup_end);
}

InProcessDeployment connect_all(TransportKind kind, size_t n_devices, RunContext& ctx) {
  if (n_devices == 0) throw ConfigError("connect_all: need at least one device");
  if (ctx.links.size() != n_devices) {
    throw ConfigError("connect_all: links not sized for device count");
  }
  switch (kind) {
    case TransportKind::tcp: return make_inprocess_tcp(n_devices, ctx);
    case TransportKind::udp: return make_inprocess_udp(n_devices, ctx);
    case TransportKind::mqtt: return make_inprocess_mqtt(n_devices, ctx);
    case TransportKind::amqp: return make_inprocess_amqp(n_devices, ctx);
    case TransportKind::zmtp: return make_inprocess_zmtp(n_devices, ctx);
  }
  throw ConfigError("connect_all: unreachable");
}

// --------------------------------------------------------------- registration

namespace {

using nlohmann::json;

constexpr uint16_t kHelloRegister = 0;
constexpr uint16_t kHelloReady = 1;

// Owns the distributed control plane and protocol listeners; forwards the
// endpoint contract to the protocol endpoint.
class DistributedServer final : public ServerEndpoint {
 public:
  DistributedServer(std::unique_ptr<ServerEndpoint> inner,
                    std::vector<net::StreamPtr> control_streams, bool watch_control,
                    std::vector<std::shared_ptr<void>> owned, std::function<void()> teardown,
                    std::shared_ptr<std::vector<std::atomic<bool>>> dead)
      : inner_(std::move(inner)),
        control_(std::move(control_streams)),
        owned_(std::move(owned)),
        teardown_(std::move(teardown)),
        dead_(std::move(dead)) {
    if (watch_control) {
      for (size_t id = 0; id < control_.size(); ++id) {
        watchers_.emplace_back([this, id] {
          uint8_t buf[256];
          while (control_[id]->recv_some(buf, sizeof(buf), -1.0) != 0) {
          }
          (*dead_)[id].store(true);
        });
      }
    }
  }

  ~DistributedServer() override {
    for (auto& s : control_) s->close();
    for (auto& w : watchers_) w.join();
    if (teardown_) teardown_();  // stop accept/demux threads before listeners die
    inner_.reset();
  }

  void broadcast_global(uint16_t round, const Bytes& payload) override {
    inner_->broadcast_global(round, payload);
  }
  std::vector<CollectedUpdate> collect_updates(uint16_t round, size_t expected,
                                               double timeout_s) override {
    return inner_->collect_updates(round, expected, timeout_s);
  }
  void shutdown() override {
    inner_->shutdown();
    for (auto& s : control_) s->close();
  }

 private:
  std::unique_ptr<ServerEndpoint> inner_;
  std::vector<net::StreamPtr> control_;
  std::vector<std::shared_ptr<void>> owned_;
  std::function<void()> teardown_;
  std::shared_ptr<std::vector<std::atomic<bool>>> dead_;
  std::vector<std::thread> watchers_;
};

LivenessCheck make_liveness(std::shared_ptr<std::vector<std::atomic<bool>>> dead) {
  return [dead]() -> std::optional<uint16_t> {
    for (size_t i = 0; i < dead->size(); ++i) {
      if ((*dead)[i].load()) return uint16_t(i);
    }
    return std::nullopt;
  };
}

}  // namespace

std::unique_ptr<ServerEndpoint> serve_distributed(const DistributedServerOptions& options,
                                                  RunContext& ctx) {
  const size_t n = options.n_devices;
  std::vector<std::shared_ptr<void>> owned;

  // Protocol listeners must exist before agents receive their config.
  std::shared_ptr<net::TcpListener> mqtt_listener, fanout_listener, zmtp_pub_listener,
      zmtp_upd_listener, udp_ctl_listener;
  std::shared_ptr<net::UdpSocket> udp_socket;
  std::shared_ptr<MqttEngine> mqtt_engine;
  std::shared_ptr<FanoutEngine> fanout_engine;
  std::shared_ptr<std::thread> accept_thread;
  std::shared_ptr<std::atomic<bool>> accepting = std::make_shared<std::atomic<bool>>(true);

  switch (options.kind) {
    case TransportKind::tcp:
      break;
    case TransportKind::udp:
      udp_socket = std::make_shared<net::UdpSocket>(options.ports.data);
      udp_ctl_listener = std::make_shared<net::TcpListener>(options.ports.udp_control);
      break;
    case TransportKind::mqtt:
      mqtt_engine = std::make_shared<MqttEngine>();
      mqtt_listener = std::make_shared<net::TcpListener>(options.ports.mqtt_broker);
      accept_thread = std::make_shared<std::thread>([mqtt_listener, mqtt_engine, accepting] {
        while (accepting->load()) {
          if (auto s = mqtt_listener->accept(0.2)) mqtt_engine->add_connection(s);
        }
      });
      break;
    case TransportKind::amqp:
      fanout_engine = std::make_shared<FanoutEngine>();
      fanout_listener = std::make_shared<net::TcpListener>(options.ports.fanout_broker);
      accept_thread = std::make_shared<std::thread>([fanout_listener, fanout_engine, accepting] {
        while (accepting->load()) {
          if (auto s = fanout_listener->accept(0.2)) fanout_engine->add_connection(s);
        }
      });
      break;
    case TransportKind::zmtp:
      zmtp_pub_listener = std::make_shared<net::TcpListener>(options.ports.zmtp_pub);
      zmtp_upd_listener = std::make_shared<net::TcpListener>(options.ports.zmtp_updates);
      break;
  }

  // UDP demux: learn device datagram addresses from ping datagrams and route
  // chunks into per-device inboxes.
  auto udp_addr_mu = std::make_shared<std::mutex>();
  auto udp_addrs = std::make_shared<std::map<uint16_t, net::UdpEndpointAddr>>();
  std::vector<std::shared_ptr<net::QueueDatagramChannel>> udp_channels(n);
  std::shared_ptr<std::thread> demux_thread;
  if (options.kind == TransportKind::udp) {
    for (size_t id = 0; id < n; ++id) {
      auto sock = udp_socket;
      auto addrs = udp_addrs;
      auto mu = udp_addr_mu;
      const uint16_t device = uint16_t(id);
      udp_channels[id] =
          std::make_shared<net::QueueDatagramChannel>([sock, addrs, mu, device](Bytes dgram) {
            net::UdpEndpointAddr to;
            {
              std::lock_guard<std::mutex> lock(*mu);
              to = addrs->at(device);
            }
            sock->send_to(to, dgram);
          });
    }
    demux_thread = std::make_shared<std::thread>([udp_socket, udp_addr_mu, udp_addrs,
                                                  udp_channels, accepting, n] {
      while (accepting->load()) {
        auto got = udp_socket->recv_from(0.2);
        if (!got) continue;
        auto& [dgram, from] = *got;
        if (dgram.size() == 4 && dgram[0] == 0xFE && dgram[1] == 0xDD) {  // address ping
          const uint16_t device = util::get_u16be(dgram.data() + 2);
          if (device < n) {
            std::lock_guard<std::mutex> lock(*udp_addr_mu);
            (*udp_addrs)[device] = from;
          }
          continue;
        }
        // Route by registered source address.
        std::lock_guard<std::mutex> lock(*udp_addr_mu);
        for (const auto& [device, addr] : *udp_addrs) {
          if (!(addr < from) && !(from < addr)) {
            udp_channels[device]->push(std::move(dgram));
            break;
          }
        }
      }
    });
  }

  // Control plane: registration on ports.data.
  net::TcpListener control_listener(options.ports.data);
  std::vector<net::StreamPtr> control(n);
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(options.register_timeout_s));
  size_t registered = 0;
  while (registered < n) {
    const double remain =
        std::chrono::duration<double>(deadline - std::chrono::steady_clock::now()).count();
    if (remain <= 0) {
      throw TransportError("serve_distributed: connect timeout, registered " +
                           std::to_string(registered) + " of " + std::to_string(n) +
                           " devices");
    }
    auto stream = control_listener.accept(remain);
    if (!stream) continue;
    codec::WireMessage hello;
    try {
      hello = read_frame(*stream, 5.0);
    } catch (const Error&) {
      stream->close();
      continue;
    }
    if (hello.kind != codec::MsgKind::hello || hello.round != kHelloRegister) {
      stream->close();
      continue;
    }
    json j;
    try {
      j = json::parse(hello.payload.begin(), hello.payload.end());
    } catch (const json::exception&) {
      stream->close();
      continue;
    }
    const std::string run_id = j.value("run_id", "");
    const uint16_t device_id = j.value("device_id", uint16_t(0xFFFF));
    auto reject = [&](const std::string& reason) {
      codec::WireMessage nack;
      nack.kind = codec::MsgKind::end;
      nack.round = kHelloRegister;
      nack.payload.assign(reason.begin(), reason.end());
      write_frame(*stream, nack);
      stream->close();
    };
    if (run_id != options.run_id) {
      reject("run-id mismatch");
      continue;
    }
    if (device_id >= n) {
      reject("device id " + std::to_string(device_id) + " out of range");
      continue;
    }
    if (control[device_id]) {
      reject("device id " + std::to_string(device_id) + " already registered");
      continue;
    }
    if (options.kind == TransportKind::udp) {
      // Wait for this device's address ping before acknowledging.
      const auto ping_deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
      for (;;) {
        {
          std::lock_guard<std::mutex> lock(*udp_addr_mu);
          if (udp_addrs->count(device_id)) break;
        }
        if (std::chrono::steady_clock::now() > ping_deadline) {
          reject("no datagram ping received");
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      if (!udp_addrs->count(device_id)) continue;
    }
    codec::WireMessage ack;
    ack.kind = codec::MsgKind::hello;
    ack.round = kHelloRegister;
    ack.sender_id = device_id;
    ack.payload.assign(options.config_json.begin(), options.config_json.end());
    write_frame(*stream, ack);
    control[device_id] = stream;
    ++registered;
  }

  // Protocol connections + READY barrier.
  std::unique_ptr<ServerEndpoint> inner;
  auto dead = std::make_shared<std::vector<std::atomic<bool>>>(n);
  LivenessCheck liveness = make_liveness(dead);

  auto await_ready = [&](bool frames_stay_on_control) {
    for (size_t id = 0; id < n; ++id) {
      const auto msg = read_frame(*control[id], options.register_timeout_s);
      if (msg.kind != codec::MsgKind::hello || msg.round != kHelloReady) {
        throw TransportError("serve_distributed: device " + std::to_string(id) +
                             " sent an unexpected message instead of READY");
      }
      (void)frames_stay_on_control;
    }
  };

  switch (options.kind) {
    case TransportKind::tcp: {
      await_ready(true);
      inner = std::make_unique<TcpServerEndpoint>(ctx, control, nullptr);
      break;
    }
    case TransportKind::udp: {
      std::vector<net::StreamPtr> udp_control(n);
      for (size_t i = 0; i < n; ++i) {
        auto stream = udp_ctl_listener->accept(options.register_timeout_s);
        if (!stream) throw TransportError("serve_distributed: udp control connect timeout");
        const auto id_frame = read_frame(*stream, 10.0);
        if (id_frame.kind != codec::MsgKind::hello || id_frame.sender_id >= n ||
            udp_control[id_frame.sender_id]) {
          stream->close();
          throw TransportError("serve_distributed: bad udp control identification");
        }
        udp_control[id_frame.sender_id] = stream;
      }
      await_ready(false);
      std::vector<net::DatagramPtr> dgrams(udp_channels.begin(), udp_channels.end());
      inner = std::make_unique<UdpServerEndpoint>(ctx, std::move(udp_control),
                                                  std::move(dgrams), 0.05, liveness);
      break;
    }
    case TransportKind::mqtt: {
      auto [client_end, broker_end] = net::make_memory_stream_pair();
      mqtt_engine->add_connection(broker_end);
      auto client = std::make_unique<MqttClientSession>(client_end, "fl-server");
      client->connect_handshake();
      client->subscribe({"fl/update/#"});
      await_ready(false);
      inner = std::make_unique<MqttServerEndpoint>(ctx, n, nullptr, std::move(client), liveness);
      break;
    }
    case TransportKind::amqp: {
      auto [client_end, broker_end] = net::make_memory_stream_pair();
      fanout_engine->add_connection(broker_end);
      auto client = std::make_unique<FanoutClientSession>(client_end);
      client->send(broker::fanout_declare_exchange(kAmqpGlobalExchange));
      client->send(broker::fanout_declare_queue(kAmqpUpdatesQueue));
      client->send(broker::fanout_consume(kAmqpUpdatesQueue));
      await_ready(false);
      inner = std::make_unique<AmqpServerEndpoint>(ctx, n, nullptr, std::move(client), liveness);
      break;
    }
    case TransportKind::zmtp: {
      std::vector<ZmtpServerEndpoint::Subscriber> subs(n);
      for (size_t i = 0; i < n; ++i) {
        auto stream = zmtp_pub_listener->accept(options.register_timeout_s);
        if (!stream) throw TransportError("serve_distributed: zmtp pub connect timeout");
        auto session = std::make_unique<ZmtpSession>(stream);
        const auto peer = session->handshake("PUB", "");
        uint16_t id;
        try {
          id = uint16_t(std::stoul(peer.identity));
        } catch (const std::exception&) {
          throw TransportError("serve_distributed: zmtp peer sent no usable identity");
        }
        if (id >= n || subs[id].session) {
          throw TransportError("serve_distributed: duplicate or out-of-range zmtp identity " +
                               peer.identity);
        }
        auto sub_msg = session->recv_message(options.register_timeout_s);
        if (!sub_msg || sub_msg->empty() || sub_msg->front().empty() ||
            sub_msg->front()[0] != 0x01) {
          throw TransportError("serve_distributed: expected zmtp subscription from device " +
                               std::to_string(id));
        }
        subs[id].prefix.assign(sub_msg->front().begin() + 1, sub_msg->front().end());
        subs[id].session = std::move(session);
      }
      std::vector<net::StreamPtr> updates(n);
      for (size_t i = 0; i < n; ++i) {
        auto stream = zmtp_upd_listener->accept(options.register_timeout_s);
        if (!stream) throw TransportError("serve_distributed: zmtp update connect timeout");
        const auto id_frame = read_frame(*stream, 10.0);
        if (id_frame.kind != codec::MsgKind::hello || id_frame.sender_id >= n ||
            updates[id_frame.sender_id]) {
          throw TransportError("serve_distributed: bad zmtp update identification");
        }
        updates[id_frame.sender_id] = stream;
      }
      await_ready(false);
      inner = std::make_unique<ZmtpServerEndpoint>(ctx, std::move(subs), std::move(updates),
                                                   liveness);
      break;
    }
  }

  model_protocol_setup(options.kind, n, ctx);

  // Keep listeners/threads alive for the run; teardown stops the loops first.
  auto teardown = [accepting, accept_thread, demux_thread, udp_socket] {
    accepting->store(false);
    if (accept_thread && accept_thread->joinable()) accept_thread->join();
    if (udp_socket) udp_socket->close();
    if (demux_thread && demux_thread->joinable()) demux_thread->join();
  };
  for (auto& p :
       std::initializer_list<std::shared_ptr<void>>{mqtt_listener, fanout_listener,
                                                    zmtp_pub_listener, zmtp_upd_listener,
                                                    udp_ctl_listener, udp_socket,
                                                    mqtt_engine, fanout_engine}) {
    if (p) owned.push_back(p);
  }

  const bool watch_control = options.kind != TransportKind::tcp;
  return std::make_unique<DistributedServer>(std::move(inner), std::move(control),
                                             watch_control, std::move(owned),
                                             std::move(teardown), dead);
}

AgentConnection connect_agent(const AgentOptions& options) {
  auto control = net::tcp_connect(options.server_host, options.ports.data,
                                  options.connect_timeout_s);

  // Datagram socket bound up-front; its port rides in HELLO (udp only uses it).
  auto udp_socket = std::make_shared<net::UdpSocket>(uint16_t(0));
  const auto server_udp_addr =
      net::UdpSocket::resolve(options.server_host, options.ports.data);
  Bytes ping = {0xFE, 0xDD, uint8_t(options.device_id >> 8), uint8_t(options.device_id)};
  udp_socket->send_to(server_udp_addr, ping);

  json hello_payload;
  hello_payload["run_id"] = options.run_id;
  hello_payload["device_id"] = options.device_id;
  hello_payload["udp_port"] = udp_socket->port();
  codec::WireMessage hello;
  hello.kind = codec::MsgKind::hello;
  hello.round = kHelloRegister;
  hello.sender_id = options.device_id;
  const std::string hp = hello_payload.dump();
  hello.payload.assign(hp.begin(), hp.end());

  // The ping may race the server's demux startup; retry alongside HELLO.
  write_frame(*control, hello);
  codec::WireMessage reply;
  for (int attempt = 0;; ++attempt) {
    try {
      reply = read_frame(*control, 1.0);
      break;
    } catch (const TransportError& e) {
      if (std::string(e.what()).find("timed out") == std::string::npos) throw;
      if (attempt > int(options.connect_timeout_s)) throw;
      udp_socket->send_to(server_udp_addr, ping);
    }
  }
  if (reply.kind == codec::MsgKind::end) {
    throw TransportError("agent rejected: " +
                         std::string(reply.payload.begin(), reply.payload.end()));
  }
  if (reply.kind != codec::MsgKind::hello) {
    throw TransportError("agent registration: unexpected reply");
  }
  const std::string config_json(reply.payload.begin(), reply.payload.end());
  const json cfg = json::parse(config_json);
  const TransportKind kind = parse_transport_kind(cfg.at("protocol").get<std::string>());
  const size_t chunk_size = cfg.value("chunk_size", codec::kDefaultChunkSize);

  std::shared_ptr<DeviceEndpoint> endpoint;
  switch (kind) {
    case TransportKind::tcp:
      endpoint = std::make_shared<TcpDeviceEndpoint>(control, options.device_id);
      break;
    case TransportKind::udp: {
      auto udp_control = net::tcp_connect(options.server_host, options.ports.udp_control,
                                          options.connect_timeout_s);
      codec::WireMessage ident;
      ident.kind = codec::MsgKind::hello;
      ident.sender_id = options.device_id;
      write_frame(*udp_control, ident);
      // Adapter: datagram channel over the shared socket towards the server.
      class UdpChannel final : public net::DatagramChannel {
       public:
        UdpChannel(std::shared_ptr<net::UdpSocket> sock, net::UdpEndpointAddr peer)
            : sock_(std::move(sock)), peer_(peer) {}
        void send(Bytes datagram) override { sock_->send_to(peer_, datagram); }
        std::optional<Bytes> recv(double timeout_s) override {
          auto got = sock_->recv_from(timeout_s);
          if (!got) return std::nullopt;
          return std::move(got->first);
        }
        void close() override { sock_->close(); }

       private:
        std::shared_ptr<net::UdpSocket> sock_;
        net::UdpEndpointAddr peer_;
      };
      auto dgram = std::make_shared<UdpChannel>(udp_socket, server_udp_addr);
      endpoint = std::make_shared<UdpDeviceEndpoint>(udp_control, dgram, options.device_id,
                                                     chunk_size, 0.05);
      break;
    }
    case TransportKind::mqtt: {
      auto stream = net::tcp_connect(options.server_host, options.ports.mqtt_broker,
                                     options.connect_timeout_s);
      endpoint = std::make_shared<MqttDeviceEndpoint>(
          MqttDeviceEndpoint::open_session(stream, options.device_id), options.device_id);
      break;
    }
    case TransportKind::amqp: {
      auto stream = net::tcp_connect(options.server_host, options.ports.fanout_broker,
                                     options.connect_timeout_s);
      endpoint = std::make_shared<AmqpDeviceEndpoint>(
          AmqpDeviceEndpoint::open_session(stream, options.device_id), options.device_id);
      break;
    }
    case TransportKind::zmtp: {
      auto pub_stream = net::tcp_connect(options.server_host, options.ports.zmtp_pub,
                                         options.connect_timeout_s);
      auto session = ZmtpDeviceEndpoint::open_sub_session(pub_stream, options.device_id);
      auto upd_stream = net::tcp_connect(options.server_host, options.ports.zmtp_updates,
                                         options.connect_timeout_s);
      codec::WireMessage ident;
      ident.kind = codec::MsgKind::hello;
      ident.sender_id = options.device_id;
      write_frame(*upd_stream, ident);
      endpoint = std::make_shared<ZmtpDeviceEndpoint>(std::move(session), upd_stream,
                                                      options.device_id);
      break;
    }
  }

  codec::WireMessage ready;
  ready.kind = codec::MsgKind::hello;
  ready.round = kHelloReady;
  ready.sender_id = options.device_id;
  write_frame(*control, ready);

  AgentConnection out;
  out.endpoint = std::move(endpoint);
  out.config_json = config_json;
  return out;
}

}  // namespace fedcomm::transport
