#include "pmcoa/shard/subset.hpp"

#include <map>
#include <nlohmann/json.hpp>
#include <utility>

#include "pmcoa/error.hpp"
#include "pmcoa/label/taxonomy.hpp"
#include "pmcoa/util/hash.hpp"
#include "pmcoa/util/rng.hpp"

namespace pmcoa::shard {

const std::set<std::string>& default_keep_globals() {
  static const std::set<std::string> keep = [] {
    std::set<std::string> s;
    for (const char* g : {"clinical imaging", "microscopy", "immuno assays", "illustrative diagrams",
                          "chemical structures", "maps", "tools and materials",
                          "hand drawn and screen based visuals", "screen based visuals"}) {
      s.insert(label::normalize_label(g));
    }
    return s;
  }();
  return keep;
}

FilterResult concept_filter(std::vector<FigureSample> samples, const std::set<std::string>& keep_globals,
                            UnlabeledPolicy policy) {
  std::set<std::string> keep;
  for (const auto& g : keep_globals) keep.insert(label::normalize_label(g));
  FilterResult r;
  for (auto& s : samples) {
    const auto g = label::normalize_label(primary_global(s));
    if (g.empty()) {
      if (policy == UnlabeledPolicy::Strict) throw ValidationError("concept_filter: sample " + s.sample_key + " has no label");
      ++r.dropped_unlabeled;
    } else if (keep.contains(g)) {
      r.kept.push_back(std::move(s));
    } else {
      ++r.dropped_concept;
    }
  }
  return r;
}

FilterSpec filter_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("filter spec must be a JSON object");
  FilterSpec spec;
  if (j.contains("keep_globals")) {
    if (!j["keep_globals"].is_array()) throw SchemaError("filter spec: keep_globals must be an array");
    spec.keep_globals.clear();
    for (const auto& g : j["keep_globals"]) {
      if (!g.is_string()) throw SchemaError("filter spec: keep_globals entries must be strings");
      spec.keep_globals.insert(label::normalize_label(g.get<std::string>()));
    }
  }
  if (j.contains("unlabeled")) {
    const auto u = j["unlabeled"].get<std::string>();
    if (u == "strict") spec.unlabeled = UnlabeledPolicy::Strict;
    else if (u == "lenient") spec.unlabeled = UnlabeledPolicy::Lenient;
    else throw SchemaError("filter spec: unlabeled must be strict or lenient");
  }
  return spec;
}

nlohmann::json to_json(const FilterSpec& spec) {
  return {{"keep_globals", spec.keep_globals},
          {"unlabeled", spec.unlabeled == UnlabeledPolicy::Strict ? "strict" : "lenient"}};
}

std::vector<FigureSample> concept_balance(std::vector<FigureSample> samples, std::size_t cap_per_local,
                                          std::uint64_t seed) {
  if (cap_per_local == 0) throw ValidationError("concept_balance: cap must be >= 1");
  struct Group {
    std::vector<std::size_t> reservoir;
    std::size_t seen = 0;
    util::SplitMix64 rng{0};
  };
  std::map<std::string, Group> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto key = label::normalize_label(primary_local(samples[i]));
    auto [it, fresh] = groups.try_emplace(key);
    auto& g = it->second;
    if (fresh) g.rng = util::SplitMix64(util::mix_seed(seed, util::fnv1a64(key)));
    ++g.seen;
    if (g.reservoir.size() < cap_per_local) {
      g.reservoir.push_back(i);
    } else {
      const auto j = g.rng.below(g.seen);
      if (j < cap_per_local) g.reservoir[j] = i;
    }
  }
  std::vector<char> keep(samples.size(), 0);
  for (const auto& [k, g] : groups) {
    for (auto i : g.reservoir) keep[i] = 1;
  }
  std::vector<FigureSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (keep[i]) out.push_back(std::move(samples[i]));
  }
  return out;
}

std::vector<FigureSample> dedup_exact(std::vector<FigureSample> samples, std::size_t* dropped) {
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<FigureSample> out;
  std::size_t n = 0;
  for (auto& s : samples) {
    if (seen.emplace(s.metadata.value("image_hash", ""), s.caption).second) {
      out.push_back(std::move(s));
    } else {
      ++n;
    }
  }
  if (dropped) *dropped = n;
  return out;
}

}  // namespace pmcoa::shard
