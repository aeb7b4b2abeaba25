#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pmcoa::jats {

enum class LicenseGroup { Commercial, NonCommercial, Other };

std::string to_string(LicenseGroup g);
LicenseGroup license_group_from_string(const std::string& s);

struct FigureRecord {
  std::string image_id;    // graphic href without media extension; media key
  std::string fig_id;      // id attribute of the enclosing <fig>; mention key
  std::string image_file;  // path relative to the article's media directory
  std::string caption;     // empty when the nXML carried no caption
  std::vector<std::string> mentions;
  std::string image_hash;  // SHA-256 hex of the image bytes; empty if missing
  std::optional<int> width;
  std::optional<int> height;
  bool missing = false;    // referenced by the nXML but absent on disk

  friend bool operator==(const FigureRecord&, const FigureRecord&) = default;
};

struct ArticleDoc {
  std::optional<std::uint64_t> pmid;
  std::string accession_id;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  std::optional<std::string> category;
  std::string full_text;
  std::string license_raw;
  LicenseGroup license_group = LicenseGroup::Other;
  std::vector<FigureRecord> figure_set;
  std::string date;
  std::string journal;
  std::string citation;
  std::string nxml;  // path of the source nXML, relative to the ingest root

  // Filled by the metadata enrichment stage.
  std::vector<std::string> mesh_terms;
  std::vector<std::uint64_t> citing_pmids;
  std::uint64_t citing_count = 0;

  friend bool operator==(const ArticleDoc&, const ArticleDoc&) = default;
};

void to_json(nlohmann::json& j, const FigureRecord& f);
void from_json(const nlohmann::json& j, FigureRecord& f);
void to_json(nlohmann::json& j, const ArticleDoc& a);
void from_json(const nlohmann::json& j, ArticleDoc& a);

}  // namespace pmcoa::jats
