#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pmcoa/label/annotation.hpp"
#include "pmcoa/util/quantile.hpp"

namespace pmcoa::label {

// Percentage 100 * (1 - f / n) where f is the highest number of annotators
// naming any single label and n the annotator count. Labels are normalized
// first. Undefined (nullopt) for fewer than two annotators.
std::optional<double> field_disagreement(const std::vector<std::vector<std::string>>& per_annotator);

struct ClusterDisagreement {
  std::int64_t cluster_id = 0;
  double panel = 0.0;
  double global = 0.0;
  double local = 0.0;
};

// nullopt unless the cluster has at least two annotations.
std::optional<ClusterDisagreement> cluster_disagreement(const std::vector<ClusterAnnotation>& annotations);

struct ConceptDisagreement {
  util::Summary summary;
  std::array<std::size_t, 10> histogram{};  // [0,10), [10,20), ..., [90,100]
};

struct DisagreementStats {
  bool empty = true;  // no cluster had two or more annotators
  std::size_t clusters = 0;
  ConceptDisagreement panel;
  ConceptDisagreement global;
  ConceptDisagreement local;
  std::vector<ClusterDisagreement> per_cluster;
};

DisagreementStats disagreement_stats(const std::map<std::int64_t, std::vector<ClusterAnnotation>>& by_cluster);

// Truncates (not rounds) to two decimals, the way the published table
// reports 66.66 for 200/3.
double truncate_2dp(double v);

// Exact values plus a "reported" block truncated to two decimals.
void to_json(nlohmann::json& j, const DisagreementStats& s);

}  // namespace pmcoa::label
