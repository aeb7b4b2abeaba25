#include "pmcoa/label/annotation_log.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"

namespace pmcoa::label {

std::vector<ClusterAnnotation> read_annotation_log(const std::filesystem::path& path) {
  std::vector<ClusterAnnotation> out;
  if (!std::filesystem::exists(path)) return out;
  const std::string data = util::read_file(path);
  std::size_t pos = 0;
  long long line_no = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    if (nl == std::string::npos) nl = data.size();
    ++line_no;
    const std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<ClusterAnnotation>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const SchemaError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

std::vector<ClusterAnnotation> latest_per_annotator(const std::vector<ClusterAnnotation>& entries) {
  std::map<std::pair<std::string, std::int64_t>, std::size_t> last;
  for (std::size_t i = 0; i < entries.size(); ++i) last[{entries[i].annotator_id, entries[i].cluster_id}] = i;
  std::vector<std::size_t> keep;
  for (const auto& [k, i] : last) keep.push_back(i);
  std::sort(keep.begin(), keep.end());
  std::vector<ClusterAnnotation> out;
  for (std::size_t i : keep) out.push_back(entries[i]);
  return out;
}

AnnotationLog::AnnotationLog(std::filesystem::path path) : path_(std::move(path)) {
  entries_ = read_annotation_log(path_);
  for (const auto& a : entries_) {
    by_cluster_[a.cluster_id].insert(a.annotator_id);
    by_annotator_[a.annotator_id].insert(a.cluster_id);
  }
}

void AnnotationLog::append(const ClusterAnnotation& a) {
  const std::string line = nlohmann::json(a).dump();
  std::lock_guard lock(mu_);
  util::append_line_durable(path_, line);
  entries_.push_back(a);
  by_cluster_[a.cluster_id].insert(a.annotator_id);
  by_annotator_[a.annotator_id].insert(a.cluster_id);
}

std::vector<ClusterAnnotation> AnnotationLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::vector<ClusterAnnotation> AnnotationLog::snapshot() const {
  std::lock_guard lock(mu_);
  return latest_per_annotator(entries_);
}

bool AnnotationLog::has(const std::string& annotator, std::int64_t cluster) const {
  std::lock_guard lock(mu_);
  const auto it = by_cluster_.find(cluster);
  return it != by_cluster_.end() && it->second.contains(annotator);
}

std::size_t AnnotationLog::annotator_count(std::int64_t cluster) const {
  std::lock_guard lock(mu_);
  const auto it = by_cluster_.find(cluster);
  return it == by_cluster_.end() ? 0 : it->second.size();
}

std::set<std::string> AnnotationLog::annotators(std::int64_t cluster) const {
  std::lock_guard lock(mu_);
  const auto it = by_cluster_.find(cluster);
  return it == by_cluster_.end() ? std::set<std::string>{} : it->second;
}

std::size_t AnnotationLog::cluster_count(const std::string& annotator) const {
  std::lock_guard lock(mu_);
  const auto it = by_annotator_.find(annotator);
  return it == by_annotator_.end() ? 0 : it->second.size();
}

std::size_t AnnotationLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace pmcoa::label
