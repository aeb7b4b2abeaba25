#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pmcoa/cluster/embedding.hpp"
#include "pmcoa/cluster/kmeans.hpp"

namespace pmcoa::cluster {

using Assignment = std::pair<std::string, int>;

// CSV with header `image_key,cluster_id`, rows in model row order.
void save_assignments(const std::filesystem::path& path, const ClusterModel& model);
void save_assignments(const std::filesystem::path& path, const std::vector<Assignment>& rows);

// Throws ParseError on malformed rows, ValidationError on a repeated key.
std::vector<Assignment> load_assignments(const std::filesystem::path& path);
std::map<std::string, int> load_assignment_map(const std::filesystem::path& path);

// Writes `<base>.json` ({n, d, row_keys_file, values_file}), `<base>.f32`
// (row-major little-endian float32) and `<base>.keys` (one key per line).
// Values are narrowed to float32. Keys containing a newline are rejected.
void save_embeddings(const std::filesystem::path& base, const EmbeddingMatrix& m);

// `header` is the `<base>.json` path written by save_embeddings.
EmbeddingMatrix load_embeddings(const std::filesystem::path& header);

}  // namespace pmcoa::cluster
