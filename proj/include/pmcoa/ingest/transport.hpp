#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmcoa/error.hpp"

namespace pmcoa::ingest {

// Failure reported by a transport. `transient` failures (disconnects,
// timeouts, 5xx) are retried; permanent ones (not found) are not.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool transient) : Error(what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

struct Retrieved {
  std::string bytes;
  // Filled when the remote advertises them; checked by the fetcher.
  std::optional<std::uint64_t> expected_size;
  std::optional<std::string> expected_sha256;
};

// Remote file access. Implementations must be safe for concurrent use.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<std::string> list(const std::string& remote_dir) = 0;
  virtual Retrieved retrieve(const std::string& remote_path) = 0;
  virtual std::optional<std::uint64_t> size(const std::string& remote_path) = 0;
};

// Serves files from a local directory laid out like the remote mirror.
class DirectoryTransport final : public Transport {
 public:
  explicit DirectoryTransport(std::filesystem::path root) : root_(std::move(root)) {}
  std::vector<std::string> list(const std::string& remote_dir) override;
  Retrieved retrieve(const std::string& remote_path) override;
  std::optional<std::uint64_t> size(const std::string& remote_path) override;

 private:
  std::filesystem::path resolve(const std::string& remote_path) const;
  std::filesystem::path root_;
};

// libcurl-backed transport for ftp://, http(s):// and file:// base URLs,
// e.g. "ftp://ftp.ncbi.nlm.nih.gov/pub/pmc/".
class CurlTransport final : public Transport {
 public:
  explicit CurlTransport(std::string base_url, long timeout_seconds = 120);
  std::vector<std::string> list(const std::string& remote_dir) override;
  Retrieved retrieve(const std::string& remote_path) override;
  std::optional<std::uint64_t> size(const std::string& remote_path) override;

 private:
  std::string url_for(const std::string& remote_path) const;
  std::string base_url_;
  long timeout_seconds_;
};

// Picks CurlTransport for URLs with a scheme, DirectoryTransport otherwise.
std::unique_ptr<Transport> make_transport(const std::string& mirror);

}  // namespace pmcoa::ingest
