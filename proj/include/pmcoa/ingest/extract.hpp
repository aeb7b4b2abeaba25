#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pmcoa/error.hpp"
#include "pmcoa/ingest/policy.hpp"

namespace pmcoa::ingest {

class ExtractionError : public Error {
 public:
  using Error::Error;
};

// Unpacks a .tar.gz package into `dest_root/<accession_id>/`, writing only
// regular members whose lowercase final extension is in
// policy.keep_extensions. A leading path component equal to the accession id
// is folded into the destination directory. Every member name is checked
// before anything is written: absolute names or ".." components raise
// SecurityError and leave the destination untouched. Corrupt archives raise
// ExtractionError. Returns written paths sorted lexicographically.
std::vector<std::filesystem::path> extract_package(const std::filesystem::path& archive,
                                                   const DownloadPolicy& policy,
                                                   const std::filesystem::path& dest_root,
                                                   const std::string& accession_id);

}  // namespace pmcoa::ingest
