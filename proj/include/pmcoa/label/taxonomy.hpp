#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace pmcoa::label {

// Lowercases ASCII letters and removes '-' and all Unicode whitespace.
// Idempotent; may return "".
std::string normalize_label(std::string_view raw);

// Two-level concept hierarchy: ordered global concepts, each owning an
// ordered list of local concepts. Names must be non-empty and unique after
// normalization within their level; a global and a local may share a name.
class Taxonomy {
 public:
  struct Global {
    std::string name;
    std::vector<std::string> locals;
  };

  // Throws SchemaError on a malformed document, ValidationError on
  // duplicates or empty names.
  static Taxonomy from_json(const nlohmann::ordered_json& doc);
  static Taxonomy load(const std::filesystem::path& path);
  // The taxonomy shipped in data/taxonomy.json, compiled in.
  static const Taxonomy& builtin();

  nlohmann::ordered_json to_json() const;

  const std::vector<Global>& globals() const { return globals_; }
  std::size_t local_count() const;

  // Display names, looked up by any spelling that normalizes the same.
  std::optional<std::string> global_name(std::string_view label) const;
  std::optional<std::string> local_name(std::string_view label) const;
  // Display name of the global that owns a local concept.
  std::optional<std::string> parent_of(std::string_view local_label) const;

 private:
  std::vector<Global> globals_;
  std::map<std::string, std::size_t> global_index_;            // normalized -> globals_ index
  std::map<std::string, std::pair<std::size_t, std::size_t>> local_index_;  // normalized -> (global, local)
};

}  // namespace pmcoa::label
