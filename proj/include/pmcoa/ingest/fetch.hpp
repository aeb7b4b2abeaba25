#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pmcoa/ingest/file_list.hpp"
#include "pmcoa/ingest/policy.hpp"
#include "pmcoa/ingest/rate_limiter.hpp"
#include "pmcoa/ingest/retry.hpp"
#include "pmcoa/ingest/transport.hpp"

namespace pmcoa::ingest {

struct FetchOutcome {
  std::filesystem::path archive;
  std::uint64_t bytes = 0;
  int attempts = 0;       // transport requests issued
  bool skipped = false;   // already present locally
};

// Downloads the archive for `entry` into `dest_dir/<accession_id>.tar.gz`.
//
// Bytes land in a temp file that is renamed into place, and a sidecar
// `<archive>.size` records the byte count. When the archive and a matching
// sidecar already exist nothing is requested. Every request first passes
// through `limiter`. Throws FetchError (carrying the attempt count) or
// IntegrityError when the remote's advertised size/SHA-256 never matches.
FetchOutcome fetch_package(const FileListEntry& entry, const DownloadPolicy& policy, Transport& transport,
                           RateLimiter& limiter, const std::filesystem::path& dest_dir,
                           util::Clock& clock = util::SteadyClock::instance());

}  // namespace pmcoa::ingest
