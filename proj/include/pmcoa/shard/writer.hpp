#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmcoa/shard/sample.hpp"

namespace pmcoa::shard {

struct ShardInfo {
  std::string path;  // relative to the manifest's directory
  std::size_t sample_count = 0;
  std::uint64_t byte_size = 0;
  std::string sha256;

  friend bool operator==(const ShardInfo&, const ShardInfo&) = default;
};

struct ShardManifest {
  std::vector<ShardInfo> shards;
  std::size_t total_samples = 0;
  std::size_t samples_per_shard = 0;
  std::string subset_name;
  nlohmann::json filter_spec;  // null when no subset rule applied

  friend bool operator==(const ShardManifest&, const ShardManifest&) = default;
};

void to_json(nlohmann::json& j, const ShardManifest& m);
void from_json(const nlohmann::json& j, ShardManifest& m);

inline constexpr const char* kManifestName = "manifest.json";

std::string shard_file_name(std::size_t index);  // data-%06d.tar

// Reads and validates a manifest (sum of sample counts == total).
ShardManifest load_manifest(const std::filesystem::path& path);

struct WriteOptions {
  std::size_t samples_per_shard = 10000;
  std::size_t workers = 1;
  std::string subset_name = "full";
  nlohmann::json filter_spec;
  std::function<void(const std::string&)> log;
};

// Pull-style sample source; nullopt ends the stream.
using SampleSource = std::function<std::optional<FigureSample>()>;

// Cuts the stream into shard-sized blocks in order, then lets `workers`
// threads each write one block at a time to data-NNNNNN.tar (temp file +
// rename). Each sample becomes {key}.jpg, {key}.txt, {key}.json in stream
// order, so output is identical for any worker count. Writes manifest.json
// last. On any failure every shard of this run is deleted and the error
// rethrown. Duplicate sample keys raise ValidationError.
ShardManifest write_shards(const SampleSource& source, const std::filesystem::path& out_dir,
                           const WriteOptions& options);
ShardManifest write_shards(std::vector<FigureSample> samples, const std::filesystem::path& out_dir,
                           const WriteOptions& options);

// Member list of one shard in archive order (for comparisons).
std::vector<std::string> list_shard_members(const std::filesystem::path& shard);

}  // namespace pmcoa::shard
