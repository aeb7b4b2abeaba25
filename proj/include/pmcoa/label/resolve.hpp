#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pmcoa/label/annotation.hpp"
#include "pmcoa/label/taxonomy.hpp"

namespace pmcoa::label {

// Majority vote over one field. Each inner list is one annotator's labels,
// already normalized; repeats within an annotator count once, empties are
// ignored.
struct FieldVote {
  std::map<std::string, int> counts;
  std::string primary;                // highest count, ties to the smallest label; "" if no labels
  std::vector<std::string> accepted;  // count >= 2 (all labels for a lone annotator); count desc, then label
  std::vector<std::string> singles;   // labels named by exactly one annotator
  bool needs_review = false;          // lone annotator, or any label with count 1
};

FieldVote vote_field(const std::vector<std::vector<std::string>>& per_annotator);

struct ResolvedClusterLabels {
  std::int64_t cluster_id = 0;
  std::size_t annotator_count = 0;
  PanelType panel_type = PanelType::Single;
  std::string primary_global;
  std::vector<std::string> secondary_globals;
  std::string primary_local;
  std::vector<std::string> secondary_locals;
  bool needs_review = false;
  std::vector<std::string> review_reasons;
  std::vector<std::string> unknown_locals;  // accepted locals missing from the taxonomy
  // Keys are "panel:<id>", "global:<label>", "local:<label>" (normalized).
  std::map<std::string, int> vote_counts;

  friend bool operator==(const ResolvedClusterLabels&, const ResolvedClusterLabels&) = default;
};

// Resolves one cluster's annotations. Panel, global and local labels are
// voted independently after normalization. When `taxonomy` is given, global
// and known local labels are reported by their taxonomy display names.
// Throws ValidationError for an empty list or mixed cluster ids.
ResolvedClusterLabels resolve_cluster(const std::vector<ClusterAnnotation>& annotations,
                                      const Taxonomy* taxonomy = nullptr);

// Groups by cluster id and resolves each group.
std::map<std::int64_t, ResolvedClusterLabels> resolve_all(const std::vector<ClusterAnnotation>& annotations,
                                                          const Taxonomy* taxonomy = nullptr);

// Each image inherits its cluster's record. Throws NotFoundError listing
// every referenced cluster id that has no resolution.
std::map<std::string, ResolvedClusterLabels> propagate(const std::map<std::int64_t, ResolvedClusterLabels>& resolved,
                                                       const std::map<std::string, int>& assignments);

void to_json(nlohmann::json& j, const ResolvedClusterLabels& r);
void from_json(const nlohmann::json& j, ResolvedClusterLabels& r);

// CSV rows `cluster_id,annotator_count,reasons,primary_global,primary_local`
// for every resolution flagged for review.
std::string review_queue_csv(const std::map<std::int64_t, ResolvedClusterLabels>& resolved);

}  // namespace pmcoa::label
