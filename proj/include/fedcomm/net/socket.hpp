#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "fedcomm/net/channel.hpp"

namespace fedcomm::net {

// Loopback/LAN TCP stream for distributed runs.
StreamPtr tcp_connect(const std::string& host, uint16_t port, double timeout_s = 10.0);

class TcpListener {
 public:
  explicit TcpListener(uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  // nullptr on timeout.
  StreamPtr accept(double timeout_s = -1.0);
  uint16_t port() const { return port_; }
  void close();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

struct UdpEndpointAddr {
  uint32_t ip_be = 0;
  uint16_t port = 0;
  bool operator<(const UdpEndpointAddr& other) const {
    return ip_be != other.ip_be ? ip_be < other.ip_be : port < other.port;
  }
};

// Thin wrapper over one UDP socket. Receivers get the source address so a
// server can demultiplex devices.
class UdpSocket {
 public:
  // port 0 binds an ephemeral port.
  explicit UdpSocket(uint16_t port);
  ~UdpSocket();
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  uint16_t port() const { return port_; }
  void send_to(const UdpEndpointAddr& to, ByteSpan datagram);
  // nullopt on timeout or after close().
  std::optional<std::pair<Bytes, UdpEndpointAddr>> recv_from(double timeout_s = -1.0);
  void close();

  static UdpEndpointAddr resolve(const std::string& host, uint16_t port);

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

}  // namespace fedcomm::net
