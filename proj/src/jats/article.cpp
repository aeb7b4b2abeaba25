#include "pmcoa/jats/article.hpp"

#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"

namespace pmcoa::jats {

std::string to_string(LicenseGroup g) {
  switch (g) {
    case LicenseGroup::Commercial: return "commercial";
    case LicenseGroup::NonCommercial: return "noncommercial";
    case LicenseGroup::Other: return "other";
  }
  return "other";
}

LicenseGroup license_group_from_string(const std::string& s) {
  if (s == "commercial") return LicenseGroup::Commercial;
  if (s == "noncommercial") return LicenseGroup::NonCommercial;
  if (s == "other") return LicenseGroup::Other;
  throw ParseError("unknown license group '" + s + "'");
}

void to_json(nlohmann::json& j, const FigureRecord& f) {
  j = nlohmann::json{{"image_id", f.image_id},     {"fig_id", f.fig_id},   {"image_file", f.image_file},
                     {"caption", f.caption},       {"mentions", f.mentions}, {"image_hash", f.image_hash},
                     {"missing", f.missing}};
  j["width"] = f.width ? nlohmann::json(*f.width) : nlohmann::json(nullptr);
  j["height"] = f.height ? nlohmann::json(*f.height) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, FigureRecord& f) {
  j.at("image_id").get_to(f.image_id);
  f.fig_id = j.value("fig_id", "");
  j.at("image_file").get_to(f.image_file);
  j.at("caption").get_to(f.caption);
  f.mentions = j.value("mentions", std::vector<std::string>{});
  f.image_hash = j.value("image_hash", "");
  f.missing = j.value("missing", false);
  f.width = j.contains("width") && !j["width"].is_null() ? std::optional<int>(j["width"].get<int>()) : std::nullopt;
  f.height =
      j.contains("height") && !j["height"].is_null() ? std::optional<int>(j["height"].get<int>()) : std::nullopt;
}

void to_json(nlohmann::json& j, const ArticleDoc& a) {
  j = nlohmann::json::object();
  j["pmid"] = a.pmid ? nlohmann::json(*a.pmid) : nlohmann::json(nullptr);
  j["accession_id"] = a.accession_id;
  j["nxml"] = a.nxml;
  j["title"] = a.title;
  j["abstract"] = a.abstract;
  j["keywords"] = a.keywords;
  j["category"] = a.category ? nlohmann::json(*a.category) : nlohmann::json(nullptr);
  j["full_text"] = a.full_text;
  j["license"] = a.license_raw;
  j["license_group"] = to_string(a.license_group);
  j["date"] = a.date;
  j["journal"] = a.journal;
  j["citation"] = a.citation;
  j["mesh_terms"] = a.mesh_terms;
  j["citing_pmids"] = a.citing_pmids;
  j["citing_count"] = a.citing_count;
  j["figure_set"] = a.figure_set;
}

void from_json(const nlohmann::json& j, ArticleDoc& a) {
  a.pmid = j.contains("pmid") && !j["pmid"].is_null() ? std::optional<std::uint64_t>(j["pmid"].get<std::uint64_t>())
                                                       : std::nullopt;
  j.at("accession_id").get_to(a.accession_id);
  a.nxml = j.value("nxml", "");
  a.title = j.value("title", "");
  a.abstract = j.value("abstract", "");
  a.keywords = j.value("keywords", std::vector<std::string>{});
  a.category = j.contains("category") && !j["category"].is_null()
                   ? std::optional<std::string>(j["category"].get<std::string>())
                   : std::nullopt;
  a.full_text = j.value("full_text", "");
  a.license_raw = j.value("license", "");
  a.license_group = license_group_from_string(j.value("license_group", "other"));
  a.date = j.value("date", "");
  a.journal = j.value("journal", "");
  a.citation = j.value("citation", "");
  a.mesh_terms = j.value("mesh_terms", std::vector<std::string>{});
  a.citing_pmids = j.value("citing_pmids", std::vector<std::uint64_t>{});
  a.citing_count = j.value("citing_count", std::uint64_t{0});
  a.figure_set = j.value("figure_set", std::vector<FigureRecord>{});
}

}  // namespace pmcoa::jats
