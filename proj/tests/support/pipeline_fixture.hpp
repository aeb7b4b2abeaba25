#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "pmcoa/enrich/entrez.hpp"
#include "pmcoa/label/annotation.hpp"

namespace pmcoa::testing {

// Three articles with 3 + 2 + 2 figures and commercial, noncommercial and
// other licenses, packaged as they would be served by the mirror.
struct PipelineFixture {
  std::vector<FixtureArticle> articles;
  std::map<std::string, std::string> images;  // "<accession>/<file>" -> bytes
  std::map<std::string, std::pair<int, int>> image_sizes;  // same keys -> (width, height)
  std::map<std::string, std::string> citations;  // accession -> file-list citation
  std::map<std::string, std::string> packages;  // remote path -> .tar.gz bytes
  std::string file_list_csv;
  std::map<enrich::Pmid, enrich::EnrichmentRecord> metadata;

  std::size_t figure_count() const;
  void install(MockTransport& transport) const;
  // Two agreeing annotators per cluster id in [0, k).
  std::vector<label::ClusterAnnotation> annotations(int k) const;
  // (global, local) scripted for a cluster id.
  static std::pair<std::string, std::string> cluster_labels(std::int64_t cluster_id);
};

PipelineFixture three_article_fixture();

// Config tree with every path under `root` and explicit seeds; K = 3.
nlohmann::json fixture_config(const std::filesystem::path& root);

// Writes the file list and the annotation log that fixture_config points at.
void write_fixture_inputs(const PipelineFixture& f, const std::filesystem::path& root, int k = 3);

}  // namespace pmcoa::testing
