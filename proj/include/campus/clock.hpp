#pragma once

#include <atomic>
#include <chrono>

namespace campus {

using Instant = std::chrono::sys_seconds;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Instant now() const = 0;
};

class WallClock final : public Clock {
 public:
  Instant now() const override {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  }
};

// Settable clock used by scenarios, the simulator and tests.
class PinnedClock final : public Clock {
 public:
  explicit PinnedClock(Instant at = Instant{}) : ticks_(at.time_since_epoch().count()) {}

  Instant now() const override { return Instant{std::chrono::seconds{ticks_.load()}}; }
  void set(Instant at) { ticks_.store(at.time_since_epoch().count()); }
  void advance(std::chrono::seconds by) { ticks_.fetch_add(by.count()); }

 private:
  std::atomic<std::chrono::seconds::rep> ticks_;
};

}  // namespace campus
