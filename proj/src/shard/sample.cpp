#include "pmcoa/shard/sample.hpp"

#include <algorithm>

#include "pmcoa/error.hpp"

namespace pmcoa::shard {

using nlohmann::ordered_json;

std::string make_sample_key(std::string_view accession_id, std::string_view image_id) {
  if (accession_id.empty() || image_id.empty()) throw ValidationError("sample key needs an accession id and image id");
  std::string key;
  key.reserve(accession_id.size() + image_id.size() + 1);
  key.append(accession_id).push_back('_');
  key.append(image_id);
  std::replace(key.begin(), key.end(), '.', '_');
  return key;
}

const std::vector<std::string>& metadata_fields() {
  static const std::vector<std::string> fields = {
      // image data
      "image_key", "image_file", "caption",
      // image metadata
      "image_cluster_id", "image_hash", "image_file_name", "image_set", "image_context", "image_width",
      "image_height",
      // image annotations
      "image_panel_type", "image_panel_subtype", "image_primary_label", "image_secondary_label",
      "image_primary_local", "image_secondary_locals", "image_needs_review",
      // article metadata
      "accession_id", "article_keywords", "article_category", "article_title", "article_abstract",
      "article_full_text", "article_date", "article_mesh_terms", "article_journal", "article_pmid",
      "article_citation", "article_license", "article_license_group", "article_citing_pmids",
      "article_citing_count"};
  return fields;
}

std::filesystem::path image_source_path(const std::filesystem::path& media_root, const jats::ArticleDoc& article,
                                        const jats::FigureRecord& figure) {
  return media_root / std::filesystem::path(article.nxml).parent_path() / figure.image_file;
}

namespace {

ordered_json optional_int(const auto& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json article_fields(const jats::ArticleDoc& a) {
  ordered_json j = ordered_json::object();
  j["accession_id"] = a.accession_id;
  j["article_keywords"] = a.keywords;
  j["article_category"] = a.category ? ordered_json(*a.category) : ordered_json(nullptr);
  j["article_title"] = a.title;
  j["article_abstract"] = a.abstract;
  j["article_full_text"] = a.full_text;
  j["article_date"] = a.date;
  j["article_mesh_terms"] = a.mesh_terms;
  j["article_journal"] = a.journal;
  j["article_pmid"] = optional_int(a.pmid);
  j["article_citation"] = a.citation;
  j["article_license"] = a.license_raw;
  j["article_license_group"] = jats::to_string(a.license_group);
  j["article_citing_pmids"] = a.citing_pmids;
  j["article_citing_count"] = a.citing_count;
  return j;
}

std::pair<std::string, std::string> split_panel(label::PanelType p) {
  switch (p) {
    case label::PanelType::Single: return {"single", ""};
    case label::PanelType::MultiNonBio: return {"multi", "nonbio"};
    case label::PanelType::MultiBioPlots: return {"multi", "bio_plots"};
    case label::PanelType::MultiBioAssays: return {"multi", "bio_assays"};
  }
  return {"", ""};
}

}  // namespace

void denormalize(const jats::ArticleDoc& article, const LabelMap& labels, const DenormalizeOptions& options,
                 DenormalizeStats& stats, const std::function<void(FigureSample&&)>& sink) {
  const ordered_json shared = article_fields(article);
  std::vector<std::string> image_set;
  for (const auto& f : article.figure_set) image_set.push_back(f.image_id);

  for (const auto& fig : article.figure_set) {
    ++stats.figures_in;
    auto path = image_source_path(options.media_root, article, fig);
    std::error_code ec;
    if (fig.missing || !std::filesystem::is_regular_file(path, ec)) {
      ++stats.skipped_missing;
      if (options.log) options.log("skip " + article.accession_id + "/" + fig.image_id + ": image missing at " + path.string());
      continue;
    }
    FigureSample s;
    s.sample_key = make_sample_key(article.accession_id, fig.image_id);
    s.image_path = std::move(path);
    s.caption = fig.caption;

    auto& m = s.metadata;
    m["image_key"] = s.sample_key;
    m["image_file"] = fig.image_file;
    m["caption"] = fig.caption;

    const auto it = labels.find(s.sample_key);
    if (it == labels.end()) {
      if (options.require_labels) throw ValidationError("no labels for image " + s.sample_key);
      ++stats.unlabeled;
    }
    m["image_cluster_id"] = it == labels.end() ? ordered_json(nullptr) : ordered_json(it->second.cluster_id);
    m["image_hash"] = fig.image_hash;
    m["image_file_name"] = std::filesystem::path(fig.image_file).filename().string();
    m["image_set"] = image_set;
    m["image_context"] = fig.mentions;
    m["image_width"] = optional_int(fig.width);
    m["image_height"] = optional_int(fig.height);
    if (it != labels.end()) {
      const auto& r = it->second;
      auto [panel, subtype] = split_panel(r.panel_type);
      m["image_panel_type"] = panel;
      m["image_panel_subtype"] = subtype;
      m["image_primary_label"] = r.primary_global;
      m["image_secondary_label"] = r.secondary_globals;
      m["image_primary_local"] = r.primary_local;
      m["image_secondary_locals"] = r.secondary_locals;
      m["image_needs_review"] = r.needs_review;
    } else {
      m["image_panel_type"] = "";
      m["image_panel_subtype"] = "";
      m["image_primary_label"] = "";
      m["image_secondary_label"] = ordered_json::array();
      m["image_primary_local"] = "";
      m["image_secondary_locals"] = ordered_json::array();
      m["image_needs_review"] = false;
    }
    for (const auto& [k, v] : shared.items()) m[k] = v;
    ++stats.samples_out;
    sink(std::move(s));
  }
}

std::vector<FigureSample> denormalize(const std::vector<jats::ArticleDoc>& articles, const LabelMap& labels,
                                      const DenormalizeOptions& options, DenormalizeStats* stats) {
  DenormalizeStats local;
  auto& st = stats ? *stats : local;
  std::vector<FigureSample> out;
  for (const auto& a : articles) {
    denormalize(a, labels, options, st, [&](FigureSample&& s) { out.push_back(std::move(s)); });
  }
  return out;
}

std::string primary_global(const FigureSample& s) { return s.metadata.value("image_primary_label", ""); }
std::string primary_local(const FigureSample& s) { return s.metadata.value("image_primary_local", ""); }

}  // namespace pmcoa::shard
