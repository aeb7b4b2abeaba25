#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pmcoa/shard/sample.hpp"

namespace pmcoa::shard {

// Normalized global concepts kept by default: everything except tables,
// plots and charts, and formulae.
const std::set<std::string>& default_keep_globals();

enum class UnlabeledPolicy { Strict, Lenient };

struct FilterResult {
  std::vector<FigureSample> kept;
  std::size_t dropped_concept = 0;
  std::size_t dropped_unlabeled = 0;
};

// Keeps samples whose normalized primary global label is in `keep_globals`
// (normalized on entry). Strict: an unlabeled sample raises ValidationError.
FilterResult concept_filter(std::vector<FigureSample> samples, const std::set<std::string>& keep_globals,
                            UnlabeledPolicy policy = UnlabeledPolicy::Strict);

// Reads {"keep_globals": [...], "unlabeled": "strict"|"lenient"}; missing keys take defaults.
struct FilterSpec {
  std::set<std::string> keep_globals = default_keep_globals();
  UnlabeledPolicy unlabeled = UnlabeledPolicy::Strict;
};
FilterSpec filter_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FilterSpec& spec);

// At most `cap_per_local` samples per normalized primary local label, picked
// by reservoir sampling with a stream seeded from (seed, label). Survivors
// keep their input order. Unlabeled samples form their own group.
std::vector<FigureSample> concept_balance(std::vector<FigureSample> samples, std::size_t cap_per_local,
                                          std::uint64_t seed);

// Optional pre-pass: drops samples whose (image_hash, caption) pair was seen earlier.
std::vector<FigureSample> dedup_exact(std::vector<FigureSample> samples, std::size_t* dropped = nullptr);

}  // namespace pmcoa::shard
