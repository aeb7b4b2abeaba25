#include "pmcoa/label/disagreement.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "pmcoa/label/taxonomy.hpp"

namespace pmcoa::label {

std::optional<double> field_disagreement(const std::vector<std::vector<std::string>>& per_annotator) {
  const std::size_t n = per_annotator.size();
  if (n < 2) return std::nullopt;
  std::map<std::string, std::size_t> counts;
  for (const auto& labels : per_annotator) {
    std::set<std::string> mine;
    for (const auto& l : labels) {
      std::string norm = normalize_label(l);
      if (!norm.empty()) mine.insert(std::move(norm));
    }
    for (const auto& l : mine) ++counts[l];
  }
  std::size_t f = 0;
  for (const auto& [label, c] : counts) f = std::max(f, c);
  return 100.0 * (1.0 - static_cast<double>(f) / static_cast<double>(n));
}

std::optional<ClusterDisagreement> cluster_disagreement(const std::vector<ClusterAnnotation>& annotations) {
  if (annotations.size() < 2) return std::nullopt;
  std::vector<std::vector<std::string>> panels, globals, locals;
  for (const auto& a : annotations) {
    panels.push_back({to_string(a.panel_type)});
    globals.push_back(a.global_labels);
    locals.push_back(a.local_labels);
  }
  return ClusterDisagreement{annotations.front().cluster_id, *field_disagreement(panels),
                             *field_disagreement(globals), *field_disagreement(locals)};
}

namespace {

ConceptDisagreement aggregate(std::vector<double> values) {
  ConceptDisagreement c;
  for (double v : values) {
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(v / 10.0)));
    ++c.histogram[bin];
  }
  c.summary = util::summarize(std::move(values));
  return c;
}

nlohmann::json concept_json(const ConceptDisagreement& c, bool reported) {
  auto f = [&](double v) { return reported ? truncate_2dp(v) : v; };
  return {{"count", c.summary.count},
          {"min", f(c.summary.min)},
          {"max", f(c.summary.max)},
          {"mean", f(c.summary.mean)},
          {"median", f(c.summary.median)},
          {"iqr", f(c.summary.iqr)},
          {"histogram", c.histogram}};
}

}  // namespace

DisagreementStats disagreement_stats(const std::map<std::int64_t, std::vector<ClusterAnnotation>>& by_cluster) {
  DisagreementStats s;
  std::vector<double> p, g, l;
  for (const auto& [id, anns] : by_cluster) {
    const auto d = cluster_disagreement(anns);
    if (!d) continue;
    s.per_cluster.push_back(*d);
    p.push_back(d->panel);
    g.push_back(d->global);
    l.push_back(d->local);
  }
  s.clusters = s.per_cluster.size();
  s.empty = s.clusters == 0;
  s.panel = aggregate(std::move(p));
  s.global = aggregate(std::move(g));
  s.local = aggregate(std::move(l));
  return s;
}

double truncate_2dp(double v) {
  // The epsilon keeps values such as 0.29 (stored as 0.28999...) from dropping a cent.
  return std::floor(v * 100.0 + 1e-9) / 100.0;
}

void to_json(nlohmann::json& j, const DisagreementStats& s) {
  j = {{"empty", s.empty},
       {"clusters", s.clusters},
       {"exact", {{"panel", concept_json(s.panel, false)}, {"global", concept_json(s.global, false)},
                  {"local", concept_json(s.local, false)}}},
       {"reported", {{"panel", concept_json(s.panel, true)}, {"global", concept_json(s.global, true)},
                     {"local", concept_json(s.local, true)}}}};
}

}  // namespace pmcoa::label
