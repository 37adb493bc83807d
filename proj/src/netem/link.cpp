#include "fedcomm/netem/link.hpp"

#include <algorithm>
#include <cmath>

#include "fedcomm/errors.hpp"

namespace fedcomm::netem {

LinkProfile LinkProfile::preset(std::string_view name) {
  LinkProfile p;
  p.preset_name = std::string(name);
  if (name == "3g") {
    p.bandwidth_bps = 5'000'000;
  } else if (name == "4g") {
    p.bandwidth_bps = 20'000'000;
  } else if (name == "wifi") {
    p.bandwidth_bps = 60'000'000;
  } else if (name == "unlimited") {
    p.bandwidth_bps = std::nullopt;
  } else {
    throw ConfigError("unknown link preset '" + std::string(name) +
                      "', valid: 3g|4g|wifi|unlimited");
  }
  return p;
}

const std::vector<std::string>& LinkProfile::preset_names() {
  static const std::vector<std::string> names = {"3g", "4g", "wifi", "unlimited"};
  return names;
}

TokenBucket::TokenBucket(std::optional<uint64_t> rate_bps, double burst_bytes)
    : rate_bps_(rate_bps), burst_bytes_(burst_bytes) {}

double TokenBucket::rate_bytes_per_s() const {
  return rate_bps_ ? double(*rate_bps_) / 8.0 : std::numeric_limits<double>::infinity();
}

double TokenBucket::effective_rate(double t) const {
  const double rate = rate_bytes_per_s();
  double offered = 0.0;
  for (const auto& w : windows_) {
    if (t >= w.start && t < w.end) offered += w.offered_bytes_per_s;
  }
  if (offered <= 0.0) return rate;
  // FIFO fluid share: foreground is backlogged at the link rate, background
  // arrives at its offered rate; throughput splits in proportion.
  return rate * rate / (rate + offered);
}

double TokenBucket::next_boundary_after(double t) const {
  double next = std::numeric_limits<double>::infinity();
  for (const auto& w : windows_) {
    if (w.start > t) next = std::min(next, w.start);
    if (w.end > t) next = std::min(next, w.end);
  }
  return next;
}

double TokenBucket::acquire(uint64_t n_bytes, double start) {
  if (unlimited()) return start;
  // Serialize behind earlier commitments.
  double t = std::max(start, state_time_);
  // Refill over [state_time_, t], stepping at background boundaries.
  double cursor = state_time_;
  while (cursor < t) {
    const double seg_end = std::min(t, next_boundary_after(cursor));
    tokens_ = std::min(burst_bytes_, tokens_ + (seg_end - cursor) * effective_rate(cursor));
    cursor = seg_end;
  }
  state_time_ = t;
  if (tokens_ >= double(n_bytes)) {
    tokens_ -= double(n_bytes);
    return t;
  }
  // Drain the deficit forward in time at the piecewise effective rate.
  double deficit = double(n_bytes) - tokens_;
  tokens_ = 0.0;
  while (deficit > 0.0) {
    const double rate = effective_rate(t);
    const double boundary = next_boundary_after(t);
    const double dt_needed = deficit / rate;
    if (t + dt_needed <= boundary) {
      t += dt_needed;
      deficit = 0.0;
    } else {
      deficit -= (boundary - t) * rate;
      t = boundary;
    }
  }
  state_time_ = t;
  return t;
}

void TokenBucket::add_background(uint64_t offered_bps, double start, double end) {
  if (offered_bps == 0 || end <= start) return;
  windows_.push_back(Window{start, end, double(offered_bps) / 8.0});
}

void TokenBucket::stop_background(double t) {
  for (auto& w : windows_) {
    if (w.end > t) w.end = std::max(w.start, t);
  }
  std::erase_if(windows_, [](const Window& w) { return w.end <= w.start; });
}

bool TokenBucket::background_active(double t) const {
  for (const auto& w : windows_) {
    if (t >= w.start && t < w.end) return true;
  }
  return false;
}

Link::Link(const LinkProfile& profile, uint64_t stream_id, RetxModel retx)
    : profile_(profile),
      retx_(retx),
      bucket_(profile.bandwidth_bps),
      gate_key_(util::mix(profile.seed, stream_id)),
      stream_rng_(util::mix(profile.seed, stream_id, 0x5452454Dull /* "TREM" */)) {
  if (profile.loss_rate < 0.0 || profile.loss_rate > 1.0) {
    throw ConfigError("loss_rate must lie in [0, 1]");
  }
}

StreamResult Link::stream_transfer(uint64_t n_bytes, double start) {
  StreamResult res;
  res.start = start;
  const double p = profile_.loss_rate;
  double now = start;
  uint64_t remaining = n_bytes;
  while (remaining > 0) {
    const uint64_t seg = std::min<uint64_t>(remaining, retx_.segment_size);
    double rto = retx_.initial_rto_s;
    for (size_t attempt = 1;; ++attempt) {
      now = bucket_.acquire(seg, now);
      res.bytes_on_wire += seg;
      const bool lost = p > 0.0 && stream_rng_.next_double() < p;
      if (!lost || attempt >= retx_.max_attempts) break;
      ++res.retransmissions;
      now += rto;
      rto = std::min(rto * retx_.backoff_factor, retx_.rto_cap_s);
    }
    remaining -= seg;
  }
  res.end = now + profile_.base_latency_ms / 1000.0;
  return res;
}

DatagramResult Link::datagram_send(uint64_t n_bytes, double start) {
  DatagramResult res;
  res.send_end = bucket_.acquire(n_bytes, start);
  res.arrival = res.send_end + profile_.base_latency_ms / 1000.0;
  res.bytes_on_wire = n_bytes;
  return res;
}

bool Link::drop_datagram(uint32_t msg_id, uint32_t chunk_index) const {
  return util::keyed_bernoulli(gate_key_, msg_id, chunk_index, profile_.loss_rate);
}

DuplexLink::DuplexLink(const LinkProfile& profile, uint16_t device_id, RetxModel retx)
    : down(profile, util::mix(device_id, 0 /* down */), retx),
      up(profile, util::mix(device_id, 1 /* up */), retx) {}

std::vector<bool> drop_decisions(const LinkProfile& profile, uint64_t stream_id,
                                 uint32_t msg_id, size_t count) {
  const uint64_t key = util::mix(profile.seed, stream_id);
  std::vector<bool> out(count);
  for (size_t i = 0; i < count; ++i) {
    out[i] = util::keyed_bernoulli(key, msg_id, i, profile.loss_rate);
  }
  return out;
}

}  // namespace fedcomm::netem
