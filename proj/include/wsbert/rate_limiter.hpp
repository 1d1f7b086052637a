#pragma once

#include <chrono>
#include <mutex>

namespace wsbert {

// Spaces calls to Acquire() at least `interval` apart across all threads.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(std::chrono::milliseconds interval);

  void Acquire();

  std::chrono::milliseconds interval() const { return interval_; }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mutex_;
  Clock::time_point next_slot_{};
};

}  // namespace wsbert
