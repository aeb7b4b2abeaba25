#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <vector>

#include "pmcoa/shard/sample.hpp"
#include "pmcoa/shard/writer.hpp"
#include "pmcoa/util/tar.hpp"

namespace pmcoa::shard {

// Reads shards one member at a time; only the current sample is in memory.
// Truncated or malformed shards raise ParseError naming the shard and the
// member offset.
class ShardStream {
 public:
  // Shard paths in order; start at `first_shard` to resume at a boundary.
  explicit ShardStream(std::vector<std::filesystem::path> shards, std::size_t first_shard = 0);
  static ShardStream from_manifest(const std::filesystem::path& manifest_path, std::size_t first_shard = 0);
  // Continues after `consumed` samples: opens the shard holding the next
  // sample (per the manifest counts) and skips its already-consumed ones.
  static ShardStream resume(const std::filesystem::path& manifest_path, std::size_t consumed);

  std::optional<FigureSample> next();

  // Index of the shard the next sample comes from.
  std::size_t shard_index() const noexcept { return index_; }
  std::uint64_t bytes_read() const noexcept { return bytes_; }

 private:
  bool open_next();

  std::vector<std::filesystem::path> shards_;
  std::size_t index_;
  std::unique_ptr<std::ifstream> in_;
  std::unique_ptr<util::TarReader> tar_;
  std::uint64_t bytes_ = 0;
};

std::vector<FigureSample> read_all(const std::filesystem::path& manifest_path);

}  // namespace pmcoa::shard
