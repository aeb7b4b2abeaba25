#include "pmcoa/label/resolve.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

#include "pmcoa/error.hpp"
#include "pmcoa/util/csv.hpp"

namespace pmcoa::label {

FieldVote vote_field(const std::vector<std::vector<std::string>>& per_annotator) {
  FieldVote v;
  for (const auto& labels : per_annotator) {
    std::set<std::string> mine;
    for (const auto& l : labels) {
      if (!l.empty()) mine.insert(l);
    }
    for (const auto& l : mine) ++v.counts[l];
  }
  int best = 0;
  for (const auto& [label, count] : v.counts) {  // map order: ties keep the smallest label
    if (count > best) {
      best = count;
      v.primary = label;
    }
    if (count == 1) v.singles.push_back(label);
  }
  const bool lone = per_annotator.size() == 1;
  for (const auto& [label, count] : v.counts) {
    if (lone || count >= 2) v.accepted.push_back(label);
  }
  std::stable_sort(v.accepted.begin(), v.accepted.end(),
                   [&](const std::string& a, const std::string& b) { return v.counts.at(a) > v.counts.at(b); });
  v.needs_review = lone || !v.singles.empty();
  return v;
}

namespace {

std::string display_global(const std::string& n, const Taxonomy* t) {
  if (t) {
    if (auto name = t->global_name(n)) return *name;
  }
  return n;
}

std::string display_local(const std::string& n, const Taxonomy* t) {
  if (t) {
    if (auto name = t->local_name(n)) return *name;
  }
  return n;
}

}  // namespace

ResolvedClusterLabels resolve_cluster(const std::vector<ClusterAnnotation>& annotations, const Taxonomy* taxonomy) {
  if (annotations.empty()) throw ValidationError("resolve_cluster: no annotations");
  ResolvedClusterLabels r;
  r.cluster_id = annotations.front().cluster_id;
  r.annotator_count = annotations.size();

  std::vector<std::vector<std::string>> panels, globals, locals;
  for (const auto& a : annotations) {
    if (a.cluster_id != r.cluster_id) {
      throw ValidationError("resolve_cluster: annotations for clusters " + std::to_string(r.cluster_id) + " and " +
                            std::to_string(a.cluster_id) + " mixed");
    }
    panels.push_back({to_string(a.panel_type)});
    std::vector<std::string> g, l;
    for (const auto& x : a.global_labels) g.push_back(normalize_label(x));
    for (const auto& x : a.local_labels) l.push_back(normalize_label(x));
    globals.push_back(std::move(g));
    locals.push_back(std::move(l));
  }
  const FieldVote pv = vote_field(panels);
  const FieldVote gv = vote_field(globals);
  const FieldVote lv = vote_field(locals);

  r.panel_type = *panel_from_string(pv.primary);
  r.primary_global = display_global(gv.primary, taxonomy);
  for (const auto& g : gv.accepted) {
    if (g != gv.primary) r.secondary_globals.push_back(display_global(g, taxonomy));
  }
  r.primary_local = display_local(lv.primary, taxonomy);
  for (const auto& l : lv.accepted) {
    if (l != lv.primary) r.secondary_locals.push_back(display_local(l, taxonomy));
  }
  if (taxonomy) {
    std::vector<std::string> candidates = lv.accepted;
    if (!lv.primary.empty() && std::find(candidates.begin(), candidates.end(), lv.primary) == candidates.end()) {
      candidates.insert(candidates.begin(), lv.primary);
    }
    for (const auto& l : candidates) {
      if (!taxonomy->local_name(l)) r.unknown_locals.push_back(l);
    }
  }

  if (annotations.size() == 1) r.review_reasons.push_back("single annotator");
  auto note = [&](const char* field, const FieldVote& v) {
    for (const auto& s : v.singles) r.review_reasons.push_back(std::string(field) + " '" + s + "' named once");
  };
  if (annotations.size() > 1) {
    note("panel", pv);
    note("global", gv);
    note("local", lv);
  }
  r.needs_review = pv.needs_review || gv.needs_review || lv.needs_review;

  for (const auto& [k, c] : pv.counts) r.vote_counts["panel:" + k] = c;
  for (const auto& [k, c] : gv.counts) r.vote_counts["global:" + k] = c;
  for (const auto& [k, c] : lv.counts) r.vote_counts["local:" + k] = c;
  return r;
}

std::map<std::int64_t, ResolvedClusterLabels> resolve_all(const std::vector<ClusterAnnotation>& annotations,
                                                          const Taxonomy* taxonomy) {
  std::map<std::int64_t, std::vector<ClusterAnnotation>> groups;
  for (const auto& a : annotations) groups[a.cluster_id].push_back(a);
  std::map<std::int64_t, ResolvedClusterLabels> out;
  for (const auto& [id, group] : groups) out.emplace(id, resolve_cluster(group, taxonomy));
  return out;
}

std::map<std::string, ResolvedClusterLabels> propagate(const std::map<std::int64_t, ResolvedClusterLabels>& resolved,
                                                       const std::map<std::string, int>& assignments) {
  std::set<int> missing;
  for (const auto& [key, cluster] : assignments) {
    if (!resolved.contains(cluster)) missing.insert(cluster);
  }
  if (!missing.empty()) {
    std::string ids;
    for (int id : missing) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
    throw NotFoundError("unresolved clusters referenced by assignments: " + ids);
  }
  std::map<std::string, ResolvedClusterLabels> out;
  for (const auto& [key, cluster] : assignments) out.emplace(key, resolved.at(cluster));
  return out;
}

void to_json(nlohmann::json& j, const ResolvedClusterLabels& r) {
  j = {{"cluster_id", r.cluster_id},
       {"annotator_count", r.annotator_count},
       {"panel_type", to_string(r.panel_type)},
       {"primary_global", r.primary_global},
       {"secondary_globals", r.secondary_globals},
       {"primary_local", r.primary_local},
       {"secondary_locals", r.secondary_locals},
       {"needs_review", r.needs_review},
       {"review_reasons", r.review_reasons},
       {"unknown_locals", r.unknown_locals},
       {"vote_counts", r.vote_counts}};
}

void from_json(const nlohmann::json& j, ResolvedClusterLabels& r) {
  try {
    r.cluster_id = j.at("cluster_id").get<std::int64_t>();
    r.annotator_count = j.at("annotator_count").get<std::size_t>();
    const auto panel = panel_from_string(j.at("panel_type").get<std::string>());
    if (!panel) throw SchemaError("resolved labels: bad panel_type");
    r.panel_type = *panel;
    r.primary_global = j.at("primary_global").get<std::string>();
    r.secondary_globals = j.at("secondary_globals").get<std::vector<std::string>>();
    r.primary_local = j.at("primary_local").get<std::string>();
    r.secondary_locals = j.at("secondary_locals").get<std::vector<std::string>>();
    r.needs_review = j.at("needs_review").get<bool>();
    r.review_reasons = j.value("review_reasons", std::vector<std::string>{});
    r.unknown_locals = j.value("unknown_locals", std::vector<std::string>{});
    r.vote_counts = j.value("vote_counts", std::map<std::string, int>{});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("resolved labels: ") + e.what());
  }
}

std::string review_queue_csv(const std::map<std::int64_t, ResolvedClusterLabels>& resolved) {
  std::string out = "cluster_id,annotator_count,reasons,primary_global,primary_local\n";
  for (const auto& [id, r] : resolved) {
    if (!r.needs_review) continue;
    std::string reasons;
    for (const auto& s : r.review_reasons) reasons += (reasons.empty() ? "" : "; ") + s;
    out += util::csv_line({std::to_string(id), std::to_string(r.annotator_count), reasons, r.primary_global,
                           r.primary_local}) +
           "\n";
  }
  return out;
}

}  // namespace pmcoa::label
