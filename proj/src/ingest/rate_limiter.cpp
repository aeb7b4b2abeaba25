#include "pmcoa/ingest/rate_limiter.hpp"

#include <algorithm>
#include <cmath>

#include "pmcoa/error.hpp"

namespace pmcoa::ingest {

RateLimiter::RateLimiter(double requests_per_second, util::Clock& clock, util::Clock::duration margin)
    : rate_(requests_per_second), clock_(clock) {
  if (!(requests_per_second > 0.0) || !std::isfinite(requests_per_second)) {
    throw ValidationError("rate limiter: rate must be > 0");
  }
  capacity_ = static_cast<std::size_t>(std::ceil(requests_per_second));
  const double seconds = static_cast<double>(capacity_) / requests_per_second;
  spacing_ = std::chrono::duration_cast<util::Clock::duration>(std::chrono::duration<double>(seconds)) + margin;
}

util::Clock::time_point RateLimiter::acquire() {
  util::Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = clock_.now();
    if (slots_.size() == capacity_) slot = std::max(slot, slots_.front() + spacing_);
    if (!slots_.empty()) slot = std::max(slot, slots_.back());
    slots_.push_back(slot);
    if (slots_.size() > capacity_) slots_.pop_front();
  }
  clock_.sleep_until(slot);
  return slot;
}

}  // namespace pmcoa::ingest
