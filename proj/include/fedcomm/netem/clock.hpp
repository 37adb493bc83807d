#pragma once

#include <chrono>
#include <mutex>

namespace fedcomm::netem {

enum class ClockMode { wall, virtual_time };

// Single time authority for a run. Virtual mode advances only through
// recorded delays and never sleeps; wall mode sleeps for real.
//
// Concurrent transfers merge as parallel: each caller computes its own end
// time from its own start, and wait_until takes the max. Sequential callers
// that chain start times get additive behavior.
class Clock {
 public:
  explicit Clock(ClockMode mode) : mode_(mode), epoch_(std::chrono::steady_clock::now()) {}

  ClockMode mode() const { return mode_; }

  double now() const;

  // Ensures the clock has reached time t (seconds). Virtual: monotonic max
  // merge. Wall: sleeps until t relative to the clock epoch.
  void wait_until(double t);

  // Convenience: wait_until(now() + delay).
  void advance(double delay);

 private:
  ClockMode mode_;
  std::chrono::steady_clock::time_point epoch_;
  mutable std::mutex mu_;
  double virtual_now_ = 0.0;
};

}  // namespace fedcomm::netem
