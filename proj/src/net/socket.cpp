#include "fedcomm/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "fedcomm/errors.hpp"

namespace fedcomm::net {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

int poll_fd(int fd, short events, double timeout_s) {
  struct pollfd pfd {};
  pfd.fd = fd;
  pfd.events = events;
  const int timeout_ms = timeout_s < 0 ? -1 : int(timeout_s * 1000.0 + 0.5);
  for (;;) {
    const int r = ::poll(&pfd, 1, timeout_ms);
    if (r >= 0) return r;
    if (errno != EINTR) throw_errno("poll");
  }
}

class SocketStream final : public ByteStream {
 public:
  explicit SocketStream(int fd) : fd_(fd) {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  ~SocketStream() override { close(); }

  void send(ByteSpan bytes) override {
    size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("tcp send");
      }
      off += size_t(n);
    }
  }

  size_t recv_some(uint8_t* buf, size_t max, double timeout_s) override {
    if (poll_fd(fd_, POLLIN, timeout_s) == 0) return 0;  // timeout
    for (;;) {
      const ssize_t n = ::recv(fd_, buf, max, 0);
      if (n >= 0) return size_t(n);
      if (errno != EINTR) throw_errno("tcp recv");
    }
  }

  void close() override {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
  }

 private:
  std::atomic<int> fd_;
};

}  // namespace

StreamPtr tcp_connect(const std::string& host, uint16_t port, double timeout_s) {
  const UdpEndpointAddr addr = UdpSocket::resolve(host, port);
  struct sockaddr_in sa {};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr.s_addr = addr.ip_be;

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_s));
  // Retry while the listener may not be up yet (agents racing the server).
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
      return std::make_shared<SocketStream>(fd);
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("tcp_connect: timed out connecting to " + host + ":" +
                           std::to_string(port));
    }
    struct timespec ts {0, 50'000'000};
    ::nanosleep(&ts, nullptr);
  }
}

TcpListener::TcpListener(uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  struct sockaddr_in sa {};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr.s_addr = htonl(INADDR_ANY);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    throw_errno("bind tcp port " + std::to_string(port));
  }
  if (::listen(fd_, 64) != 0) throw_errno("listen");
  socklen_t len = sizeof(sa);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

TcpListener::~TcpListener() { close(); }

StreamPtr TcpListener::accept(double timeout_s) {
  if (fd_ < 0) throw TransportError("accept on closed listener");
  if (poll_fd(fd_, POLLIN, timeout_s) == 0) return nullptr;
  const int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) throw_errno("accept");
  return std::make_shared<SocketStream>(client);
}

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

UdpSocket::UdpSocket(uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw_errno("socket");
  const int buf = 8 * 1024 * 1024;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &buf, sizeof(buf));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &buf, sizeof(buf));
  struct sockaddr_in sa {};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr.s_addr = htonl(INADDR_ANY);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    throw_errno("bind udp port " + std::to_string(port));
  }
  socklen_t len = sizeof(sa);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

UdpSocket::~UdpSocket() { close(); }

void UdpSocket::send_to(const UdpEndpointAddr& to, ByteSpan datagram) {
  struct sockaddr_in sa {};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(to.port);
  sa.sin_addr.s_addr = to.ip_be;
  for (;;) {
    const ssize_t n = ::sendto(fd_, datagram.data(), datagram.size(), 0,
                               reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
    if (n >= 0) return;
    if (errno == EINTR) continue;
    if (errno == ENOBUFS || errno == EAGAIN) {  // pace instead of dropping locally
      struct timespec ts {0, 1'000'000};
      ::nanosleep(&ts, nullptr);
      continue;
    }
    throw_errno("udp sendto");
  }
}

std::optional<std::pair<Bytes, UdpEndpointAddr>> UdpSocket::recv_from(double timeout_s) {
  if (fd_ < 0) return std::nullopt;
  if (poll_fd(fd_, POLLIN, timeout_s) == 0) return std::nullopt;
  Bytes buf(65536);
  struct sockaddr_in sa {};
  socklen_t len = sizeof(sa);
  const ssize_t n =
      ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
  if (n < 0) {
    if (errno == EINTR || errno == EBADF) return std::nullopt;
    throw_errno("udp recvfrom");
  }
  buf.resize(size_t(n));
  return std::make_pair(std::move(buf), UdpEndpointAddr{sa.sin_addr.s_addr, ntohs(sa.sin_port)});
}

void UdpSocket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

UdpEndpointAddr UdpSocket::resolve(const std::string& host, uint16_t port) {
  struct in_addr addr {};
  if (::inet_pton(AF_INET, host.c_str(), &addr) == 1) {
    return UdpEndpointAddr{addr.s_addr, port};
  }
  struct addrinfo hints {};
  hints.ai_family = AF_INET;
  struct addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + host + "'");
  }
  const auto* sa = reinterpret_cast<sockaddr_in*>(res->ai_addr);
  UdpEndpointAddr out{sa->sin_addr.s_addr, port};
  ::freeaddrinfo(res);
  return out;
}

}  // namespace fedcomm::net
