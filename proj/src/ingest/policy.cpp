#include "pmcoa/ingest/policy.hpp"

#include <cmath>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"

namespace pmcoa::ingest {

void DownloadPolicy::validate() {
  if (!(max_requests_per_second > 0.0) || !std::isfinite(max_requests_per_second)) {
    throw ValidationError("download policy: max_requests_per_second must be > 0");
  }
  if (max_retries < 0) throw ValidationError("download policy: max_retries must be >= 0");
  if (retry_base_delay.count() < 0) throw ValidationError("download policy: retry_base_delay must be >= 0");
  std::set<std::string> lowered;
  for (const auto& ext : keep_extensions) {
    std::string e = util::to_lower(ext);
    if (!e.empty() && e.front() == '.') e.erase(0, 1);
    if (e.empty()) throw ValidationError("download policy: empty extension in keep set");
    lowered.insert(std::move(e));
  }
  keep_extensions = std::move(lowered);
}

}  // namespace pmcoa::ingest
