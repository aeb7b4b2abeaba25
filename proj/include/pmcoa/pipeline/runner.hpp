#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"
#include "pmcoa/pipeline/config.hpp"

namespace pmcoa::pipeline {

// Prerequisite stage output absent or never completed.
class MissingPrerequisiteError : public ValidationError {
 public:
  MissingPrerequisiteError(const std::string& what, std::string stage)
      : ValidationError(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Prerequisite output changed since its completion marker was written.
class StaleInputError : public ValidationError {
 public:
  StaleInputError(const std::string& what, std::string stage) : ValidationError(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Test and embedding hooks; null members fall back to the config.
struct RunHooks {
  ingest::Transport* transport = nullptr;
  enrich::MetadataService* metadata = nullptr;
  cluster::EmbeddingBackend* backend = nullptr;
  Log log;
};

struct StageResult {
  std::string stage;
  std::string status;  // ok | skipped | failed
  StageCounts counts;
  std::string error;
  double seconds = 0;
};

struct RunReport {
  std::vector<StageResult> stages;
  int exit_code = 0;  // 0 ok, 2 validation, 3 stage failure
  std::string error;
};
void to_json(nlohmann::json& j, const StageResult& r);
void to_json(nlohmann::json& j, const RunReport& r);

// Stages this stage reads from.
std::vector<std::string> prerequisites(const PipelineConfig& config, const std::string& stage);
// Files and directories a stage produces.
std::vector<std::filesystem::path> stage_outputs(const PipelineConfig& config, const std::string& stage);

// SHA-256 over sorted relative paths and contents; missing paths hash as absent.
std::string content_hash(const std::vector<std::filesystem::path>& paths);

// <work_dir>/.pmcoa-state/<stage>.done.json
std::filesystem::path marker_path(const PipelineConfig& config, const std::string& stage);

// Runs `stages` (ordered subset of stage_order()). Writes <work_dir>/run_report.json.
RunReport run(const PipelineConfig& config, const std::vector<std::string>& stages, const RunHooks& hooks = {});

}  // namespace pmcoa::pipeline
