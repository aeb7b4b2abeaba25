#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmcoa/jats/article.hpp"
#include "pmcoa/label/resolve.hpp"

namespace pmcoa::shard {

// One image-caption pair. `metadata` is a flat object whose keys are listed in
// metadata_fields(); figures of one article carry identical article fields.
struct FigureSample {
  std::string sample_key;
  std::filesystem::path image_path;  // source file; empty for samples read back from shards
  std::string image;                 // bytes; filled by readers, optional before writing
  std::string caption;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  friend bool operator==(const FigureSample&, const FigureSample&) = default;
};

// accession_id + "_" + image_id, with '.' replaced by '_' so the WebDataset
// key/extension split stays unambiguous.
std::string make_sample_key(std::string_view accession_id, std::string_view image_id);

const std::vector<std::string>& metadata_fields();

// Per-image labels, keyed by sample key (the key used for embedding and clustering).
using LabelMap = std::map<std::string, label::ResolvedClusterLabels>;

struct DenormalizeOptions {
  std::filesystem::path media_root;  // extract root; images live next to each article's nXML
  bool require_labels = false;       // true: an image without labels is a ValidationError
  std::function<void(const std::string&)> log;
};

struct DenormalizeStats {
  std::size_t figures_in = 0;
  std::size_t samples_out = 0;
  std::size_t skipped_missing = 0;
  std::size_t unlabeled = 0;
};

std::filesystem::path image_source_path(const std::filesystem::path& media_root, const jats::ArticleDoc& article,
                                        const jats::FigureRecord& figure);

// Emits one sample per figure whose image exists, in figure order.
void denormalize(const jats::ArticleDoc& article, const LabelMap& labels, const DenormalizeOptions& options,
                 DenormalizeStats& stats, const std::function<void(FigureSample&&)>& sink);

std::vector<FigureSample> denormalize(const std::vector<jats::ArticleDoc>& articles, const LabelMap& labels,
                                      const DenormalizeOptions& options, DenormalizeStats* stats = nullptr);

// Label accessors over the metadata object; empty when unlabeled.
std::string primary_global(const FigureSample& s);
std::string primary_local(const FigureSample& s);

}  // namespace pmcoa::shard
