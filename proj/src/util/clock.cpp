#include "pmcoa/util/clock.hpp"

#include <thread>

namespace pmcoa::util {

void SteadyClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

SteadyClock& SteadyClock::instance() {
  static SteadyClock clock;
  return clock;
}

}  // namespace pmcoa::util
