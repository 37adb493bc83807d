#pragma once

// Internal endpoint implementations shared between the in-process and
// distributed wiring. Not part of the public surface.

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "fedcomm/broker/fanout.hpp"
#include "fedcomm/broker/mqtt.hpp"
#include "fedcomm/broker/zmtp.hpp"
#include "fedcomm/net/channel.hpp"
#include "fedcomm/transport/transport.hpp"
#include "fedcomm/util/queue.hpp"

namespace fedcomm::transport {

// Reports the lowest dead device id, if any (distributed control plane).
using LivenessCheck = std::function<std::optional<uint16_t>()>;

// Exact-frame helpers for control-plane conversations on raw streams.
void write_frame(net::ByteStream& stream, const codec::WireMessage& msg);
codec::WireMessage read_frame(net::ByteStream& stream, double timeout_s);

// Models the protocol-connection handshake on the emulated links and leaves
// ctx cursors and setup_time_s at the handshake end. Scripted identically in
// both deployment modes.
void model_protocol_setup(TransportKind kind, size_t n_devices, RunContext& ctx);

// ---------------------------------------------------------------------- tcp

class TcpServerEndpoint final : public ServerEndpoint {
 public:
  TcpServerEndpoint(RunContext& ctx, std::vector<net::StreamPtr> streams,
                    LivenessCheck liveness = nullptr);
  ~TcpServerEndpoint() override;

  void broadcast_global(uint16_t round, const Bytes& payload) override;
  std::vector<CollectedUpdate> collect_updates(uint16_t round, size_t expected,
                                               double timeout_s) override;
  void shutdown() override;

 private:
  RunContext& ctx_;
  std::vector<net::StreamPtr> streams_;
  std::vector<std::unique_ptr<util::BlockingQueue<codec::WireMessage>>> inbox_;
  std::vector<std::thread> readers_;
  LivenessCheck liveness_;
};

class TcpDeviceEndpoint final : public DeviceEndpoint {
 public:
  TcpDeviceEndpoint(net::StreamPtr stream, uint16_t device_id);

  DownMessage receive_global(double timeout_s) override;
  void send_update(uint16_t round, const Bytes& payload) override;

 private:
  net::StreamPtr stream_;
  uint16_t device_id_;
  codec::StreamParser parser_;
};

// ---------------------------------------------------------------------- udp

class UdpServerEndpoint final : public ServerEndpoint {
 public:
  UdpServerEndpoint(RunContext& ctx, std::vector<net::StreamPtr> control,
                    std::vector<net::DatagramPtr> datagrams, double drain_grace_s,
                    LivenessCheck liveness = nullptr);
  ~UdpServerEndpoint() override;

  void broadcast_global(uint16_t round, const Bytes& payload) override;
  std::vector<CollectedUpdate> collect_updates(uint16_t round, size_t expected,
                                               double timeout_s) override;
  void shutdown() override;

 private:
  RunContext& ctx_;
  std::vector<net::StreamPtr> control_;
  std::vector<net::DatagramPtr> datagrams_;
  std::vector<std::unique_ptr<util::BlockingQueue<codec::WireMessage>>> control_inbox_;
  std::vector<std::thread> readers_;
  double drain_grace_s_;
  LivenessCheck liveness_;
};

class UdpDeviceEndpoint final : public DeviceEndpoint {
 public:
  UdpDeviceEndpoint(net::StreamPtr control, net::DatagramPtr datagram, uint16_t device_id,
                    size_t chunk_size, double drain_grace_s);

  DownMessage receive_global(double timeout_s) override;
  void send_update(uint16_t round, const Bytes& payload) override;

 private:
  net::StreamPtr control_;
  net::DatagramPtr datagram_;
  uint16_t device_id_;
  size_t chunk_size_;
  double drain_grace_s_;
  codec::StreamParser parser_;
};

// --------------------------------------------------------------------- mqtt

// Broker plus one pump thread per connection; packet processing is serialized
// through a single mutex.
class MqttEngine {
 public:
  ~MqttEngine();
  int add_connection(net::StreamPtr stream);
  size_t session_count() const;
  void stop();

 private:
  void pump(int conn);

  mutable std::mutex mu_;
  broker::MqttBroker broker_;
  std::map<int, net::StreamPtr> conns_;
  std::vector<std::thread> pumps_;
  int next_conn_ = 0;
  std::atomic<bool> stopping_{false};
};

// Blocking MQTT 3.1.1 client over one stream; single-threaded pump.
class MqttClientSession {
 public:
  MqttClientSession(net::StreamPtr stream, std::string client_id);

  void connect_handshake(double timeout_s = 30.0);
  void subscribe(const std::vector<std::string>& topics, double timeout_s = 30.0);
  void publish(const std::string& topic, ByteSpan payload);
  // Next PUBLISH; other packet types are handled internally.
  std::optional<broker::DecodedMqtt> next_publish(double timeout_s);
  void disconnect();

 private:
  std::optional<broker::DecodedMqtt> read_packet(double timeout_s);

  net::StreamPtr stream_;
  std::string client_id_;
  broker::MqttDecoder decoder_;
  uint16_t next_packet_id_ = 1;
};

class MqttServerEndpoint final : public ServerEndpoint {
 public:
  MqttServerEndpoint(RunContext& ctx, size_t n_devices, std::unique_ptr<MqttEngine> engine,
                     std::unique_ptr<MqttClientSession> client, LivenessCheck liveness = nullptr);

  void broadcast_global(uint16_t round, const Bytes& payload) override;
  std::vector<CollectedUpdate> collect_updates(uint16_t round, size_t expected,
                                               double timeout_s) override;
  void shutdown() override;
  size_t broker_session_count() const { return engine_->session_count(); }

 private:
  RunContext& ctx_;
  size_t n_;
  std::unique_ptr<MqttEngine> engine_;
  std::unique_ptr<MqttClientSession> client_;
  LivenessCheck liveness_;
};

class MqttDeviceEndpoint final : public DeviceEndpoint {
 public:
  MqttDeviceEndpoint(std::unique_ptr<MqttClientSession> session, uint16_t device_id);

  DownMessage receive_global(double timeout_s) override;
  void send_update(uint16_t round, const Bytes& payload) override;

  static std::unique_ptr<MqttClientSession> open_session(net::StreamPtr stream,
                                                         uint16_t device_id);

 private:
  std::unique_ptr<MqttClientSession> session_;
  uint16_t device_id_;
};

// --------------------------------------------------------------------- amqp

class FanoutEngine {
 public:
  ~FanoutEngine();
  int add_connection(net::StreamPtr stream);
  void stop();

 private:
  void pump(int conn);

  mutable std::mutex mu_;
  broker::FanoutBroker broker_;
  std::map<int, net::StreamPtr> conns_;
  std::vector<std::thread> pumps_;
  int next_conn_ = 0;
  std::atomic<bool> stopping_{false};
};

class FanoutClientSession {
 public:
  explicit FanoutClientSession(net::StreamPtr stream);

  void send(const broker::FanoutFrame& frame);
  // Next DELIVER; throws BrokerError if the broker reports an error frame.
  std::optional<broker::FanoutFrame> next_deliver(double timeout_s);

 private:
  net::StreamPtr stream_;
  broker::FanoutFrameParser parser_;
};

class AmqpServerEndpoint final : public ServerEndpoint {
 public:
  AmqpServerEndpoint(RunContext& ctx, size_t n_devices, std::unique_ptr<FanoutEngine> engine,
                     std::unique_ptr<FanoutClientSession> client,
                     LivenessCheck liveness = nullptr);

  void broadcast_global(uint16_t round, const Bytes& payload) override;
  std::vector<CollectedUpdate> collect_updates(uint16_t round, size_t expected,
                                               double timeout_s) override;
  void shutdown() override;

 private:
  RunContext& ctx_;
  size_t n_;
  std::unique_ptr<FanoutEngine> engine_;
  std::unique_ptr<FanoutClientSession> client_;
  LivenessCheck liveness_;
};

class AmqpDeviceEndpoint final : public DeviceEndpoint {
 public:
  AmqpDeviceEndpoint(std::unique_ptr<FanoutClientSession> session, uint16_t device_id);

  DownMessage receive_global(double timeout_s) override;
  void send_update(uint16_t round, const Bytes& payload) override;

  static std::unique_ptr<FanoutClientSession> open_session(net::StreamPtr stream,
                                                           uint16_t device_id);

 private:
  std::unique_ptr<FanoutClientSession> session_;
  uint16_t device_id_;
};

// --------------------------------------------------------------------- zmtp

// One ZMTP connection after greeting + READY exchange.
class ZmtpSession {
 public:
  explicit ZmtpSession(net::StreamPtr stream) : stream_(std::move(stream)) {}

  struct PeerInfo {
    std::string socket_type;
    std::string identity;
  };
  // Sends greeting + READY, validates the peer's; throws TransportError /
  // BrokerError naming the offending byte offset.
  PeerInfo handshake(const std::string& socket_type, const std::string& identity,
                     double timeout_s = 30.0);

  void send_message(const std::vector<ByteSpan>& parts);
  // Full multipart message (MORE-joined); commands are not expected here.
  std::optional<std::vector<Bytes>> recv_message(double timeout_s);

  net::ByteStream& stream() { return *stream_; }

 private:
  std::optional<broker::ZmtpFrame> read_frame(double timeout_s);

  net::StreamPtr stream_;
  broker::ZmtpFrameParser parser_;
};

class ZmtpServerEndpoint final : public ServerEndpoint {
 public:
  struct Subscriber {
    std::unique_ptr<ZmtpSession> session;
    std::string prefix;  // subscribed topic prefix
  };

  ZmtpServerEndpoint(RunContext& ctx, std::vector<Subscriber> subscribers,
                     std::vector<net::StreamPtr> update_streams,
                     LivenessCheck liveness = nullptr);
  ~ZmtpServerEndpoint() override;

  void broadcast_global(uint16_t round, const Bytes& payload) override;
  std::vector<CollectedUpdate> collect_updates(uint16_t round, size_t expected,
                                               double timeout_s) override;
  void shutdown() override;

 private:
  RunContext& ctx_;
  std::vector<Subscriber> subscribers_;  // index = device id
  std::vector<net::StreamPtr> update_streams_;
  std::vector<std::unique_ptr<util::BlockingQueue<codec::WireMessage>>> inbox_;
  std::vector<std::thread> readers_;
  LivenessCheck liveness_;
};

class ZmtpDeviceEndpoint final : public DeviceEndpoint {
 public:
  ZmtpDeviceEndpoint(std::unique_ptr<ZmtpSession> sub_session, net::StreamPtr update_stream,
                     uint16_t device_id);

  DownMessage receive_global(double timeout_s) override;
  void send_update(uint16_t round, const Bytes& payload) override;

  // SUB-side connection setup: handshake + subscription to kZmtpTopicPrefix.
  static std::unique_ptr<ZmtpSession> open_sub_session(net::StreamPtr stream,
                                                       uint16_t device_id);

 private:
  std::unique_ptr<ZmtpSession> session_;
  net::StreamPtr update_stream_;
  uint16_t device_id_;
};

// Factories used by connect_all / serve_distributed.
InProcessDeployment make_inprocess_tcp(size_t n, RunContext& ctx);
InProcessDeployment make_inprocess_udp(size_t n, RunContext& ctx);
InProcessDeployment make_inprocess_mqtt(size_t n, RunContext& ctx);
InProcessDeployment make_inprocess_amqp(size_t n, RunContext& ctx);
InProcessDeployment make_inprocess_zmtp(size_t n, RunContext& ctx);

}  // namespace fedcomm::transport
