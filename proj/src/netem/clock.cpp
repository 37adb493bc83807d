#include "fedcomm/netem/clock.hpp"

#include <algorithm>
#include <thread>

namespace fedcomm::netem {

double Clock::now() const {
  if (mode_ == ClockMode::virtual_time) {
    std::lock_guard<std::mutex> lock(mu_);
    return virtual_now_;
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
}

void Clock::wait_until(double t) {
  if (mode_ == ClockMode::virtual_time) {
    std::lock_guard<std::mutex> lock(mu_);
    virtual_now_ = std::max(virtual_now_, t);
    return;
  }
  const auto target = epoch_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(t));
  std::this_thread::sleep_until(target);
}

void Clock::advance(double delay) {
  if (delay > 0) wait_until(now() + delay);
}

}  // namespace fedcomm::netem
