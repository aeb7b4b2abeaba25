#include "pmcoa/label/annotation.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"

namespace pmcoa::label {

namespace {

struct PanelInfo {
  PanelType type;
  const char* id;
  const char* text;
};

constexpr std::array<PanelInfo, 4> kPanels = {{
    {PanelType::Single, "single", "Single Panels"},
    {PanelType::MultiNonBio, "multi_nonbio", "Multiple panels with non-biomedical imaging"},
    {PanelType::MultiBioPlots, "multi_bio_plots", "Multiple panels with biomedical imaging and plots"},
    {PanelType::MultiBioAssays, "multi_bio_assays", "Multiple panels with biomedical imaging and assays"},
}};

}  // namespace

std::string to_string(PanelType p) { return kPanels[static_cast<std::size_t>(p)].id; }

std::string panel_description(PanelType p) { return kPanels[static_cast<std::size_t>(p)].text; }

std::optional<PanelType> panel_from_string(std::string_view s) {
  for (const auto& info : kPanels) {
    if (s == info.id) return info.type;
  }
  return std::nullopt;
}

const std::vector<PanelType>& all_panel_types() {
  static const std::vector<PanelType> all = {PanelType::Single, PanelType::MultiNonBio, PanelType::MultiBioPlots,
                                             PanelType::MultiBioAssays};
  return all;
}

void to_json(nlohmann::json& j, const ClusterAnnotation& a) {
  j = {{"annotator_id", a.annotator_id},     {"cluster_id", a.cluster_id},
       {"panel_type", to_string(a.panel_type)}, {"global_labels", a.global_labels},
       {"local_labels", a.local_labels},     {"submitted_at", a.submitted_at}};
}

void from_json(const nlohmann::json& j, ClusterAnnotation& a) {
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!j.contains(name)) throw SchemaError(std::string("annotation: missing field ") + name);
    return j.at(name);
  };
  try {
    a.annotator_id = field("annotator_id").get<std::string>();
    a.cluster_id = field("cluster_id").get<std::int64_t>();
    const auto panel = panel_from_string(field("panel_type").get<std::string>());
    if (!panel) throw SchemaError("annotation: bad panel_type");
    a.panel_type = *panel;
    a.global_labels = field("global_labels").get<std::vector<std::string>>();
    a.local_labels = field("local_labels").get<std::vector<std::string>>();
    a.submitted_at = j.value("submitted_at", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("annotation: ") + e.what());
  }
}

std::vector<FieldError> validate_annotation_json(const nlohmann::json& body, const Taxonomy& taxonomy) {
  std::vector<FieldError> errors;
  if (!body.is_object()) return {{"", "body must be a JSON object"}};

  const auto id = body.find("annotator_id");
  if (id == body.end() || !id->is_string() || id->get<std::string>().empty()) {
    errors.push_back({"annotator_id", "required non-empty string"});
  }
  const auto panel = body.find("panel_type");
  if (panel == body.end() || !panel->is_string() || !panel_from_string(panel->get<std::string>())) {
    errors.push_back({"panel_type", "must be one of single, multi_nonbio, multi_bio_plots, multi_bio_assays"});
  }
  const auto globals = body.find("global_labels");
  if (globals == body.end() || !globals->is_array() || globals->empty()) {
    errors.push_back({"global_labels", "required non-empty list"});
  } else {
    for (std::size_t i = 0; i < globals->size(); ++i) {
      const auto& g = (*globals)[i];
      const std::string where = "global_labels[" + std::to_string(i) + "]";
      if (!g.is_string()) {
        errors.push_back({where, "must be a string"});
      } else if (!taxonomy.global_name(g.get<std::string>())) {
        errors.push_back({where, "unknown global concept '" + g.get<std::string>() + "'"});
      }
    }
  }
  const auto locals = body.find("local_labels");
  if (locals == body.end() || !locals->is_array()) {
    errors.push_back({"local_labels", "required list"});
  } else {
    for (std::size_t i = 0; i < locals->size(); ++i) {
      const auto& l = (*locals)[i];
      const std::string where = "local_labels[" + std::to_string(i) + "]";
      if (!l.is_string()) {
        errors.push_back({where, "must be a string"});
      } else if (normalize_label(l.get<std::string>()).empty()) {
        errors.push_back({where, "must not be empty"});
      }
    }
  }
  if (const auto ts = body.find("submitted_at"); ts != body.end() && !ts->is_string()) {
    errors.push_back({"submitted_at", "must be an ISO-8601 string"});
  }
  return errors;
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace pmcoa::label
