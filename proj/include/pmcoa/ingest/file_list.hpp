#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pmcoa::ingest {

// One row of the mirror's index CSV.
struct FileListEntry {
  std::string file_path;  // remote archive path, relative to the mirror root
  std::string citation;
  std::string accession_id;
  std::string date;
  std::optional<std::uint64_t> pmid;
  std::string license;

  friend bool operator==(const FileListEntry&, const FileListEntry&) = default;
};

// Parses the file list. The header must name File, Citation, Accession_ID,
// Date, PMID and License in any order; extra columns are ignored. A "PMID:"
// prefix on the PMID cell is tolerated.
//
// Throws ParseError (with record number) for malformed CSV or a non-numeric
// PMID, SchemaError naming the first missing column, and ValidationError for
// an empty File/Accession_ID or a repeated File value.
std::vector<FileListEntry> parse_file_list(std::string_view csv_bytes);

void to_json(nlohmann::json& j, const FileListEntry& e);
void from_json(const nlohmann::json& j, FileListEntry& e);

}  // namespace pmcoa::ingest
