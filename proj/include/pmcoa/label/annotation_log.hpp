#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pmcoa/label/annotation.hpp"

namespace pmcoa::label {

// Append-only JSONL log of annotations. Each append is fsynced before it
// returns. Re-submissions are appended too; readers keep the last entry per
// (annotator, cluster). Safe for concurrent use within one process.
class AnnotationLog {
 public:
  explicit AnnotationLog(std::filesystem::path path);

  void append(const ClusterAnnotation& a);

  // Every line, in order.
  std::vector<ClusterAnnotation> entries() const;
  // Last entry per (annotator, cluster), ordered by that entry's position.
  std::vector<ClusterAnnotation> snapshot() const;

  bool has(const std::string& annotator, std::int64_t cluster) const;
  std::size_t annotator_count(std::int64_t cluster) const;
  std::set<std::string> annotators(std::int64_t cluster) const;
  std::size_t cluster_count(const std::string& annotator) const;
  std::size_t size() const;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::vector<ClusterAnnotation> entries_;
  std::map<std::int64_t, std::set<std::string>> by_cluster_;
  std::map<std::string, std::set<std::int64_t>> by_annotator_;
};

// Reads a log file without taking ownership (missing file = empty).
std::vector<ClusterAnnotation> read_annotation_log(const std::filesystem::path& path);
std::vector<ClusterAnnotation> latest_per_annotator(const std::vector<ClusterAnnotation>& entries);

}  // namespace pmcoa::label
