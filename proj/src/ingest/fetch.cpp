#include "pmcoa/ingest/fetch.hpp"

#include <charconv>

#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/hash.hpp"
#include "pmcoa/util/text.hpp"

namespace fs = std::filesystem;

namespace pmcoa::ingest {
namespace {

std::optional<std::uint64_t> read_size_sidecar(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  const std::string text = util::trim(util::read_file(p));
  std::uint64_t v = 0;
  const auto [ptr, err] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (err != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

void check_accession(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find('/') != std::string::npos ||
      id.find('\\') != std::string::npos) {
    throw SecurityError("unsafe accession id for a local file name: '" + id + "'");
  }
}

}  // namespace

FetchOutcome fetch_package(const FileListEntry& entry, const DownloadPolicy& policy, Transport& transport,
                           RateLimiter& limiter, const fs::path& dest_dir, util::Clock& clock) {
  check_accession(entry.accession_id);
  FetchOutcome out;
  out.archive = dest_dir / (entry.accession_id + ".tar.gz");
  const fs::path sidecar = fs::path(out.archive.string() + ".size");

  std::error_code ec;
  if (fs::is_regular_file(out.archive, ec)) {
    const auto recorded = read_size_sidecar(sidecar);
    if (recorded && *recorded == fs::file_size(out.archive)) {
      out.bytes = *recorded;
      out.skipped = true;
      return out;
    }
  }

  const RetrySchedule schedule{policy.max_retries, policy.retry_base_delay};
  Retrieved got = with_retry(
      schedule, clock, "fetch " + entry.file_path,
      [&] {
        limiter.acquire();
        Retrieved r = transport.retrieve(entry.file_path);
        if (r.expected_size && *r.expected_size != r.bytes.size()) {
          throw IntegrityError("fetch " + entry.file_path + ": size mismatch (expected " +
                                   std::to_string(*r.expected_size) + ", got " + std::to_string(r.bytes.size()) + ")",
                               0);
        }
        if (r.expected_sha256 && *r.expected_sha256 != util::sha256_hex(r.bytes)) {
          throw IntegrityError("fetch " + entry.file_path + ": checksum mismatch", 0);
        }
        return r;
      },
      &out.attempts);

  util::write_file_atomic(out.archive, got.bytes);
  util::write_file_atomic(sidecar, std::to_string(got.bytes.size()) + "\n");
  out.bytes = got.bytes.size();
  return out;
}

}  // namespace pmcoa::ingest
