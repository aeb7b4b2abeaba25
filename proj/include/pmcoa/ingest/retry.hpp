#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <string>
#include <utility>

#include "pmcoa/error.hpp"
#include "pmcoa/ingest/transport.hpp"
#include "pmcoa/util/clock.hpp"

namespace pmcoa::ingest {

// Raised when every allowed attempt failed.
class FetchError : public Error {
 public:
  FetchError(const std::string& what, int attempts) : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class IntegrityError : public FetchError {
 public:
  using FetchError::FetchError;
};

struct RetrySchedule {
  int max_retries = 5;
  std::chrono::milliseconds base_delay{500};

  // Delay before retry number `retry` (1-based): base * 2^(retry-1).
  std::chrono::milliseconds delay_before(int retry) const {
    return base_delay * (1LL << std::min(retry - 1, 30));
  }
};

// Runs `attempt` until it succeeds, a non-transient TransportError escapes, or
// 1 + max_retries attempts are used. Transient TransportErrors and
// IntegrityErrors are retried. `attempts_out` receives the attempt count.
template <typename Fn>
auto with_retry(const RetrySchedule& schedule, util::Clock& clock, const std::string& what, Fn&& attempt,
                int* attempts_out = nullptr) -> decltype(attempt()) {
  int attempts = 0;
  while (true) {
    ++attempts;
    if (attempts_out) *attempts_out = attempts;
    try {
      return attempt();
    } catch (const TransportError& e) {
      if (!e.transient()) throw FetchError(what + ": " + e.what(), attempts);
      if (attempts > schedule.max_retries) {
        throw FetchError(what + ": giving up after " + std::to_string(attempts) + " attempts: " + e.what(),
                         attempts);
      }
    } catch (const IntegrityError& e) {
      if (attempts > schedule.max_retries) throw IntegrityError(e.what(), attempts);
    }
    clock.sleep_for(schedule.delay_before(attempts));
  }
}

}  // namespace pmcoa::ingest
