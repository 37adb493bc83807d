#include "fedcomm/net/channel.hpp"

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include "fedcomm/errors.hpp"

namespace fedcomm::net {

namespace {

// One direction of an in-process stream: segment queue + partial-read offset.
struct StreamDir {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> segments;
  size_t head_offset = 0;
  bool closed = false;

  void write(ByteSpan bytes) {
    {
      std::lock_guard<std::mutex> lock(mu);
      if (closed) return;
      segments.emplace_back(bytes.begin(), bytes.end());
    }
    cv.notify_one();
  }

  size_t read(uint8_t* buf, size_t max, double timeout_s) {
    std::unique_lock<std::mutex> lock(mu);
    auto ready = [&] { return closed || !segments.empty(); };
    if (timeout_s < 0) {
      cv.wait(lock, ready);
    } else if (!cv.wait_for(lock, std::chrono::duration<double>(timeout_s), ready)) {
      return 0;
    }
    size_t out = 0;
    while (out < max && !segments.empty()) {
      const Bytes& seg = segments.front();
      const size_t take = std::min(max - out, seg.size() - head_offset);
      std::memcpy(buf + out, seg.data() + head_offset, take);
      out += take;
      head_offset += take;
      if (head_offset == seg.size()) {
        segments.pop_front();
        head_offset = 0;
      }
    }
    return out;  // 0 here means closed and drained
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

struct MemoryStreamShared {
  StreamDir a_to_b;
  StreamDir b_to_a;
};

class MemoryStreamEnd final : public ByteStream {
 public:
  MemoryStreamEnd(std::shared_ptr<MemoryStreamShared> shared, bool is_a)
      : shared_(std::move(shared)), is_a_(is_a) {}

  void send(ByteSpan bytes) override {
    (is_a_ ? shared_->a_to_b : shared_->b_to_a).write(bytes);
  }

  size_t recv_some(uint8_t* buf, size_t max, double timeout_s) override {
    return (is_a_ ? shared_->b_to_a : shared_->a_to_b).read(buf, max, timeout_s);
  }

  void close() override {
    shared_->a_to_b.close();
    shared_->b_to_a.close();
  }

 private:
  std::shared_ptr<MemoryStreamShared> shared_;
  bool is_a_;
};

class MemoryDatagramEnd final : public DatagramChannel {
 public:
  MemoryDatagramEnd(std::shared_ptr<util::BlockingQueue<Bytes>> tx,
                    std::shared_ptr<util::BlockingQueue<Bytes>> rx)
      : tx_(std::move(tx)), rx_(std::move(rx)) {}

  void send(Bytes datagram) override { tx_->push(std::move(datagram)); }
  std::optional<Bytes> recv(double timeout_s) override { return rx_->pop_for(timeout_s); }
  void close() override {
    tx_->close();
    rx_->close();
  }

 private:
  std::shared_ptr<util::BlockingQueue<Bytes>> tx_;
  std::shared_ptr<util::BlockingQueue<Bytes>> rx_;
};

}  // namespace

std::pair<StreamPtr, StreamPtr> make_memory_stream_pair() {
  auto shared = std::make_shared<MemoryStreamShared>();
  return {std::make_shared<MemoryStreamEnd>(shared, true),
          std::make_shared<MemoryStreamEnd>(shared, false)};
}

std::pair<DatagramPtr, DatagramPtr> make_memory_datagram_pair() {
  auto a_to_b = std::make_shared<util::BlockingQueue<Bytes>>();
  auto b_to_a = std::make_shared<util::BlockingQueue<Bytes>>();
  return {std::make_shared<MemoryDatagramEnd>(a_to_b, b_to_a),
          std::make_shared<MemoryDatagramEnd>(b_to_a, a_to_b)};
}

Bytes recv_exact(ByteStream& stream, size_t n, double timeout_s) {
  Bytes out(n);
  size_t got = 0;
  while (got < n) {
    const size_t r = stream.recv_some(out.data() + got, n - got, timeout_s);
    if (r == 0) {
      throw TransportError("recv_exact: stream ended after " + std::to_string(got) + " of " +
                           std::to_string(n) + " bytes");
    }
    got += r;
  }
  return out;
}

}  // namespace fedcomm::net
