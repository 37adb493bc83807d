#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedcomm/util/rng.hpp"

namespace fedcomm::netem {

// Bandwidth/loss/latency description of one emulated device<->server path.
struct LinkProfile {
  std::optional<uint64_t> bandwidth_bps;  // nullopt = unlimited
  double loss_rate = 0.0;                 // [0, 1]
  double base_latency_ms = 0.0;
  uint64_t seed = 0;
  std::string preset_name = "unlimited";

  // Presets: 3g = 5 Mbps, 4g = 20 Mbps, wifi = 60 Mbps, unlimited = no shaping.
  static LinkProfile preset(std::string_view name);
  static const std::vector<std::string>& preset_names();
};

// Loss-recovery model for reliable streams: per-segment retransmission with
// exponential timeout backoff.
struct RetxModel {
  size_t segment_size = 1448;
  double initial_rto_s = 0.200;
  double backoff_factor = 2.0;
  double rto_cap_s = 3.0;
  // Attempts per segment are capped so total-loss configurations still
  // terminate; at any loss rate below 1 the cap is statistically unreachable.
  size_t max_attempts = 64;
};

// Byte-credit rate limiter. All times are clock seconds; all credit is in
// bytes. Transfers queue behind earlier commitments on the same bucket.
// Active background flows reduce the serviceable rate for foreground traffic
// to R * R / (R + offered): a fluid FIFO share between a backlogged
// foreground and an open-loop background source.
class TokenBucket {
 public:
  explicit TokenBucket(std::optional<uint64_t> rate_bps, double burst_bytes = 64.0 * 1024);

  // Consumes n bytes of credit starting no earlier than `start`; returns the
  // completion time. Unlimited buckets complete immediately.
  double acquire(uint64_t n_bytes, double start);

  void add_background(uint64_t offered_bps, double start,
                      double end = std::numeric_limits<double>::infinity());
  // Truncates any open-ended background window to end at time t.
  void stop_background(double t);
  bool background_active(double t) const;
  size_t background_window_count() const { return windows_.size(); }

  bool unlimited() const { return !rate_bps_.has_value(); }
  double rate_bytes_per_s() const;

 private:
  struct Window {
    double start, end;
    double offered_bytes_per_s;
  };

  double effective_rate(double t) const;
  double next_boundary_after(double t) const;

  std::optional<uint64_t> rate_bps_;
  double burst_bytes_;
  double tokens_ = 0.0;   // starts empty
  double state_time_ = 0.0;
  std::vector<Window> windows_;
};

struct StreamResult {
  double start = 0.0;
  double end = 0.0;  // delivery time (latency included)
  uint64_t retransmissions = 0;
  uint64_t bytes_on_wire = 0;
};

struct DatagramResult {
  double send_end = 0.0;
  double arrival = 0.0;
  uint64_t bytes_on_wire = 0;
};

// One direction of an emulated path: a token bucket, a sequential RNG for
// stream loss, and a keyed gate for datagram loss. Not thread-safe; each
// direction has a single modeling caller.
class Link {
 public:
  Link(const LinkProfile& profile, uint64_t stream_id, RetxModel retx = {});

  // Reliable delivery of n bytes: segments are sent through the bucket, each
  // attempt is lost with probability loss_rate, every loss costs the current
  // RTO (then doubles, capped) and a re-send that also consumes credit.
  StreamResult stream_transfer(uint64_t n_bytes, double start);

  // Best-effort datagram: shaping always applies; the keyed drop decision is
  // queried separately so egress and ingress gates agree.
  DatagramResult datagram_send(uint64_t n_bytes, double start);
  bool drop_datagram(uint32_t msg_id, uint32_t chunk_index) const;

  void add_background(uint64_t offered_bps, double start,
                      double end = std::numeric_limits<double>::infinity()) {
    bucket_.add_background(offered_bps, start, end);
  }
  void stop_background(double t) { bucket_.stop_background(t); }
  bool background_active(double t) const { return bucket_.background_active(t); }

  const LinkProfile& profile() const { return profile_; }
  const RetxModel& retx_model() const { return retx_; }
  TokenBucket& bucket() { return bucket_; }

 private:
  LinkProfile profile_;
  RetxModel retx_;
  TokenBucket bucket_;
  uint64_t gate_key_;
  util::Rng stream_rng_;
};

// Both directions of a device<->server path (one shaped rate per direction).
struct DuplexLink {
  DuplexLink(const LinkProfile& profile, uint16_t device_id, RetxModel retx = {});

  Link down;  // server -> device
  Link up;    // device -> server
};

// Keyed per-datagram drop decisions for a whole message; decision i matches
// Link::drop_datagram(msg_id, i) on a link built from the same profile and
// stream id.
std::vector<bool> drop_decisions(const LinkProfile& profile, uint64_t stream_id,
                                 uint32_t msg_id, size_t count);

}  // namespace fedcomm::netem
