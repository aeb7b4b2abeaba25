#pragma once

#include <filesystem>
#include <vector>

#include "pmcoa/enrich/entrez.hpp"
#include "pmcoa/jats/article.hpp"

namespace pmcoa::enrich {

void apply_record(jats::ArticleDoc& article, const EnrichmentRecord& record);

struct EnrichSummary {
  std::size_t articles = 0;
  std::size_t with_pmid = 0;
  std::size_t batches = 0;
};

// Enriches every article in place across the article files of `dir`. Each
// file is rewritten through a temp file and rename; articles without a
// pmid are left untouched.
EnrichSummary enrich_article_dir(const std::filesystem::path& dir, MetadataService& service,
                                 std::size_t batch_size = 200, const FetchOptions& options = {});

}  // namespace pmcoa::enrich
