#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pmcoa/label/taxonomy.hpp"

namespace pmcoa::label {

enum class PanelType { Single, MultiNonBio, MultiBioPlots, MultiBioAssays };

std::string to_string(PanelType p);              // "single", "multi_nonbio", ...
std::optional<PanelType> panel_from_string(std::string_view s);
std::string panel_description(PanelType p);      // form wording
const std::vector<PanelType>& all_panel_types();

// One annotator's answers for one cluster.
struct ClusterAnnotation {
  std::string annotator_id;
  std::int64_t cluster_id = 0;
  PanelType panel_type = PanelType::Single;
  std::vector<std::string> global_labels;
  std::vector<std::string> local_labels;
  std::string submitted_at;  // ISO-8601 UTC

  friend bool operator==(const ClusterAnnotation&, const ClusterAnnotation&) = default;
};

void to_json(nlohmann::json& j, const ClusterAnnotation& a);
// Strict: throws SchemaError naming the first bad field.
void from_json(const nlohmann::json& j, ClusterAnnotation& a);

struct FieldError {
  std::string field;
  std::string message;
};

// Checks a submission body: annotator_id present, panel_type one of the four
// values, global_labels a non-empty list of taxonomy globals, local_labels a
// list of strings that are non-empty after normalization. Unknown local
// labels are allowed. Returns every problem found.
std::vector<FieldError> validate_annotation_json(const nlohmann::json& body, const Taxonomy& taxonomy);

std::string utc_timestamp_now();

}  // namespace pmcoa::label
