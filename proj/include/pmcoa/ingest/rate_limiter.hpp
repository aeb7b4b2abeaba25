#pragma once

#include <cstddef>
#include <deque>
#include <mutex>

#include "pmcoa/util/clock.hpp"

namespace pmcoa::ingest {

// Request-rate cap shared by concurrent fetchers.
//
// Every call to acquire() reserves a send slot. With c = ceil(rate), slot i
// is placed no earlier than slot i-c plus c/rate seconds, so any window of one
// second holds at most c slots and the long-run rate is `rate`. Slots are
// handed out in call order; the caller sleeps until its slot outside the lock.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second, util::Clock& clock = util::SteadyClock::instance(),
                       util::Clock::duration margin = std::chrono::milliseconds(2));

  // Blocks until the caller may issue one request; returns the slot time.
  util::Clock::time_point acquire();

  std::size_t capacity() const noexcept { return capacity_; }
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  std::size_t capacity_;
  util::Clock::duration spacing_;  // c / rate, plus margin
  util::Clock& clock_;
  std::mutex mu_;
  std::deque<util::Clock::time_point> slots_;  // last `capacity_` reservations
};

}  // namespace pmcoa::ingest
