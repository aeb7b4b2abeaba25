#pragma once

#include <cstddef>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pmcoa/error.hpp"

namespace pmcoa::cluster {

// n x d real matrix with one image key per row.
struct EmbeddingMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_keys;

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(values.cols()); }

  // Throws ValidationError on NaN/Inf, duplicate keys or a key count that
  // differs from the row count.
  void validate() const;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

// Maps image bytes to a fixed-dimension vector. Implementations must be safe
// to call from several threads; embed() throws BackendError on failure.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<float> embed(std::string_view image_bytes) = 0;
};

// Deterministic stand-in: a unit vector drawn from a normal distribution
// seeded by the SHA-256 of the bytes. Equal bytes give equal rows.
class HashBackend final : public EmbeddingBackend {
 public:
  explicit HashBackend(std::size_t dim = 1024) : dim_(dim) {}
  std::vector<float> embed(std::string_view image_bytes) override;

 private:
  std::size_t dim_;
};

// Talks to a long-running child process over stdin/stdout.
//   request:  u32 little-endian byte count, then the image bytes
//   response: u32 little-endian d, then d little-endian float32 values;
//             d == 0 reports that the image could not be embedded
// Calls are serialized. The child is started lazily and reaped on destruction.
class ExternalProcessBackend final : public EmbeddingBackend {
 public:
  explicit ExternalProcessBackend(std::vector<std::string> argv);
  ~ExternalProcessBackend() override;
  ExternalProcessBackend(const ExternalProcessBackend&) = delete;
  ExternalProcessBackend& operator=(const ExternalProcessBackend&) = delete;

  std::vector<float> embed(std::string_view image_bytes) override;

 private:
  void start();
  void stop();

  std::vector<std::string> argv_;
  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

struct ImageItem {
  std::string key;
  std::string bytes;
};

struct SkippedImage {
  std::string key;
  std::string reason;
};

struct EmbedResult {
  EmbeddingMatrix matrix;
  std::vector<SkippedImage> skipped;
};

// Embeds every image; rows follow input order regardless of `workers`.
// Images the backend rejects (or whose vectors have the wrong dimension or
// non-finite values) are listed in `skipped`. Duplicate keys raise
// ValidationError.
EmbedResult embed_images(const std::vector<ImageItem>& images, EmbeddingBackend& backend, unsigned workers = 1);

}  // namespace pmcoa::cluster
