#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fedcomm/codec/chunk.hpp"
#include "fedcomm/codec/stream.hpp"
#include "fedcomm/metrics/metrics.hpp"
#include "fedcomm/netem/clock.hpp"
#include "fedcomm/netem/link.hpp"
#include "fedcomm/util/bytes.hpp"

namespace fedcomm::transport {

enum class TransportKind { tcp, udp, mqtt, amqp, zmtp };

TransportKind parse_transport_kind(const std::string& name);
std::string to_string(TransportKind kind);
const std::vector<std::string>& transport_names();

// Default ports; with_base shifts the harness-owned ports so parallel runs
// do not collide (broker ports move with the same offset).
struct Ports {
  uint16_t data = 9000;  // tcp data + registration control plane
  uint16_t udp_control = 9001;
  uint16_t mqtt_broker = 1883;
  uint16_t fanout_broker = 5672;
  uint16_t zmtp_pub = 9010;
  uint16_t zmtp_updates = 9011;

  static Ports with_base(uint16_t base);
};

// Shared run state: the clock, the metrics sink, one emulated duplex link per
// device, and the virtual-time cursors. The server-side endpoint is the only
// writer of cursors; device endpoints never touch timing.
struct RunContext {
  netem::Clock* clock = nullptr;
  metrics::Collector* collector = nullptr;
  std::vector<std::unique_ptr<netem::DuplexLink>> links;
  std::vector<double> device_cursor;
  double server_cursor = 0.0;
  double setup_time_s = 0.0;
  size_t chunk_size = codec::kDefaultChunkSize;
  double collect_timeout_s = 30.0;

  // Virtual-mode CPU-stress knob: models serialization compute as
  // (factor - 1) * bytes / 1 GiB/s per transfer while CPU stress is active.
  bool cpu_stress = false;
  double cpu_serialize_factor = 1.0;

  double serialize_delay(uint64_t bytes) const {
    if (!cpu_stress || cpu_serialize_factor <= 1.0) return 0.0;
    return (cpu_serialize_factor - 1.0) * double(bytes) / (1024.0 * 1024.0 * 1024.0);
  }

  netem::DuplexLink& link(uint16_t device_id) { return *links.at(device_id); }
};

struct CollectedUpdate {
  uint16_t device_id = 0;
  Bytes payload;
  uint32_t missing_chunks = 0;
};

class ServerEndpoint {
 public:
  virtual ~ServerEndpoint() = default;
  virtual void broadcast_global(uint16_t round, const Bytes& payload) = 0;
  // Blocks until every expected device delivered its round-r update; throws
  // TransportError naming the missing device on timeout or disconnect.
  // Returns updates sorted by device_id.
  virtual std::vector<CollectedUpdate> collect_updates(uint16_t round, size_t expected,
                                                       double timeout_s) = 0;
  virtual void shutdown() = 0;
};

struct DownMessage {
  bool shutdown = false;
  uint16_t round = 0;
  Bytes payload;
  uint32_t missing_chunks = 0;
};

class DeviceEndpoint {
 public:
  virtual ~DeviceEndpoint() = default;
  // Blocks until the next broadcast (or the shutdown control message).
  virtual DownMessage receive_global(double timeout_s = -1.0) = 0;
  virtual void send_update(uint16_t round, const Bytes& payload) = 0;
};

struct InProcessDeployment {
  std::unique_ptr<ServerEndpoint> server;
  std::vector<std::shared_ptr<DeviceEndpoint>> devices;
};

// Builds server + device endpoints over in-process channels; models protocol
// handshakes on the emulated links (ctx.setup_time_s) and leaves all cursors
// at the setup end.
InProcessDeployment connect_all(TransportKind kind, size_t n_devices, RunContext& ctx);

// -- Distributed mode ------------------------------------------------------

struct RegisteredDevice {
  uint16_t device_id = 0;
  uint16_t udp_port = 0;  // device's datagram port (udp transport only)
  uint32_t peer_ip_be = 0;
};

// Listens on the control plane, validates HELLO{run_id, device_id}, pushes
// config_json, waits for all READY notices, then builds the protocol
// endpoint. Rejected agents get an END reply and are disconnected.
struct DistributedServerOptions {
  TransportKind kind;
  size_t n_devices = 4;
  Ports ports;
  std::string run_id;
  std::string config_json;
  double register_timeout_s = 60.0;
};

std::unique_ptr<ServerEndpoint> serve_distributed(const DistributedServerOptions& options,
                                                  RunContext& ctx);

// Agent side: register on the control plane, receive config_json, build the
// protocol endpoint, send READY.
struct AgentOptions {
  std::string server_host = "127.0.0.1";
  Ports ports;
  uint16_t device_id = 0;
  std::string run_id;
  double connect_timeout_s = 30.0;
};

struct AgentConnection {
  std::shared_ptr<DeviceEndpoint> endpoint;
  std::string config_json;
};

AgentConnection connect_agent(const AgentOptions& options);

// -- Shared internals (used by the per-protocol implementations) ------------

inline uint32_t make_msg_id(uint16_t round, uint16_t device_id, bool up) {
  return (uint32_t(round) << 16) | (uint32_t(device_id & 0x7FFF) << 1) | (up ? 1u : 0u);
}

inline constexpr uint16_t kShutdownRound = 0xFFFF;

inline const char* kZmtpTopicPrefix = "fl";
inline const char* kAmqpGlobalExchange = "fl.global";
inline const char* kAmqpUpdatesQueue = "fl.updates";
std::string amqp_device_queue(uint16_t device_id);
std::string mqtt_global_topic(uint16_t round);
std::string mqtt_update_topic(uint16_t device_id, uint16_t round);
inline const char* kMqttCtlTopic = "fl/ctl";

void record_event(RunContext& ctx, uint16_t device_id, uint16_t round,
                  metrics::Direction direction, uint64_t bytes, double start, double end,
                  uint64_t retransmissions, uint32_t missing_chunks);

}  // namespace fedcomm::transport
