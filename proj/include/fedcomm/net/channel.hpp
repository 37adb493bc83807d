#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include "fedcomm/util/bytes.hpp"
#include "fedcomm/util/queue.hpp"

namespace fedcomm::net {

// Reliable ordered byte stream, blocking, one reader + one writer per end.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void send(ByteSpan bytes) = 0;
  // Blocks until bytes are available; returns 0 on EOF or timeout expiry.
  // timeout_s < 0 waits indefinitely.
  virtual size_t recv_some(uint8_t* buf, size_t max, double timeout_s = -1.0) = 0;
  virtual void close() = 0;
};

using StreamPtr = std::shared_ptr<ByteStream>;

// Connected pair of in-process stream ends.
std::pair<StreamPtr, StreamPtr> make_memory_stream_pair();

// Unreliable-in-principle datagram channel; the in-memory flavor never drops
// (loss gates live in the transports).
class DatagramChannel {
 public:
  virtual ~DatagramChannel() = default;
  virtual void send(Bytes datagram) = 0;
  virtual std::optional<Bytes> recv(double timeout_s = -1.0) = 0;
  virtual void close() = 0;
};

using DatagramPtr = std::shared_ptr<DatagramChannel>;

std::pair<DatagramPtr, DatagramPtr> make_memory_datagram_pair();

// Datagram channel backed by an inbox queue plus a caller-supplied sender;
// used to demultiplex one server-side UDP socket into per-device channels.
class QueueDatagramChannel final : public DatagramChannel {
 public:
  explicit QueueDatagramChannel(std::function<void(Bytes)> sender)
      : sender_(std::move(sender)) {}

  void send(Bytes datagram) override {
    if (sender_) sender_(std::move(datagram));
  }
  std::optional<Bytes> recv(double timeout_s = -1.0) override {
    return inbox_.pop_for(timeout_s);
  }
  void close() override { inbox_.close(); }

  void push(Bytes datagram) { inbox_.push(std::move(datagram)); }

 private:
  std::function<void(Bytes)> sender_;
  util::BlockingQueue<Bytes> inbox_;
};

// Reads exactly n bytes or throws TransportError (EOF/timeout).
Bytes recv_exact(ByteStream& stream, size_t n, double timeout_s = -1.0);

}  // namespace fedcomm::net
