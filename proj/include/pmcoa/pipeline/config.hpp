#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmcoa/pipeline/stages.hpp"

namespace pmcoa::pipeline {

// Stage names in execution order.
const std::vector<std::string>& stage_order();

// Path names a config may declare under "paths".
const std::vector<std::string>& path_names();

struct EnrichConfig {
  bool enabled = true;
  std::string service_url;  // PMCOA_ENTREZ_URL overrides
  std::string tool = "pmcoa";
  std::string email;
  std::size_t batch_size = 200;
  int max_retries = 5;
  std::chrono::milliseconds retry_base_delay{500};
  double rate = 3.0;
};

struct PipelineConfig {
  std::filesystem::path work_dir;                          // absolute
  std::map<std::string, std::filesystem::path> paths;      // absolute
  std::string mirror;                                      // PMCOA_MIRROR_URL overrides
  IngestOptions ingest;
  std::size_t extract_per_file = 200;
  EnrichConfig enrich;
  std::size_t store_per_file = 200;
  EmbedOptions embed;
  std::optional<ClusterOptions> cluster;                   // null until a seed is given
  std::optional<std::size_t> annotate_sample_size;
  std::optional<std::uint64_t> annotate_seed;
  std::optional<std::filesystem::path> taxonomy;           // null: built-in
  SerializeOptions serialize;
  bool serialize_use_labels = true;
  bool serialize_seed_set = false;
  std::vector<EvalTaskSpec> eval_tasks;
  EvalRunOptions eval;
  bool eval_seeds_set = false;

  // Raw section text per stage, part of the stage's input fingerprint.
  std::map<std::string, nlohmann::json> sections;

  const std::filesystem::path& path(const std::string& name) const;  // ValidationError if undeclared
  bool has_path(const std::string& name) const { return paths.contains(name); }
};

// Relative paths resolve against work_dir, which itself resolves against base_dir.
// Unknown keys, bad types and out-of-range knobs raise ValidationError.
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Paths and seeds required by `stages`; ValidationError listing every problem.
void validate_for(const PipelineConfig& config, const std::vector<std::string>& stages);

// "a,b,c" -> ordered, deduplicated stage list; empty -> all stages.
std::vector<std::string> parse_stage_list(const std::string& csv);

}  // namespace pmcoa::pipeline
