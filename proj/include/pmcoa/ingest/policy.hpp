#pragma once

#include <chrono>
#include <set>
#include <string>

namespace pmcoa::ingest {

struct DownloadPolicy {
  double max_requests_per_second = 3.0;
  int max_retries = 5;
  // Not given by the source mirror's documentation; configurable.
  std::chrono::milliseconds retry_base_delay{500};
  std::set<std::string> keep_extensions{"nxml", "jpg"};

  // Throws ValidationError when a field is out of range. Extensions are
  // lowercased in place.
  void validate();
};

}  // namespace pmcoa::ingest
