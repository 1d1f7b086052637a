#include "wsbert/rate_limiter.hpp"

#include <thread>

namespace wsbert {

RateLimiter::RateLimiter(std::chrono::milliseconds interval)
    : interval_(interval) {}

void RateLimiter::Acquire() {
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    auto now = Clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

}  // namespace wsbert
