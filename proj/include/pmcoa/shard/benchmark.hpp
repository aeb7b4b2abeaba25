#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace pmcoa::shard {

struct IoModeResult {
  std::string mode;  // "sequential_shards" or "random_files"
  std::size_t samples = 0;
  std::uint64_t bytes = 0;
  double seconds = 0;
  double samples_per_s = 0;
  double mb_per_s = 0;
};

struct BenchmarkReport {
  IoModeResult sequential;
  IoModeResult random;
  double ratio = 0;         // sequential samples/s over random samples/s
  bool cold_cache = false;  // page-cache eviction succeeded for every file
};

void to_json(nlohmann::json& j, const IoModeResult& r);
void to_json(nlohmann::json& j, const BenchmarkReport& r);

// Writes every shard member as its own file under files_dir.
void materialize_files(const std::filesystem::path& manifest_path, const std::filesystem::path& files_dir);

// Asks the kernel to drop cached pages of every regular file under `root`.
// Returns false if any request failed.
bool evict_page_cache(const std::filesystem::path& root);

// Reads the whole corpus once as sequential shards and once as individual
// files in a seeded random order, evicting the page cache before each pass.
// `files_dir` is filled by materialize_files when empty.
BenchmarkReport benchmark_io(const std::filesystem::path& manifest_path, const std::filesystem::path& files_dir,
                             std::uint64_t seed = 0);

}  // namespace pmcoa::shard
