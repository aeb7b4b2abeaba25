#include "pmcoa/enrich/apply.hpp"

#include <unordered_map>

#include "pmcoa/store/jsonl.hpp"
#include "pmcoa/util/fs.hpp"

namespace pmcoa::enrich {

void apply_record(jats::ArticleDoc& article, const EnrichmentRecord& record) {
  article.mesh_terms = record.mesh_terms;
  article.citing_pmids = record.citing_pmids;
  article.citing_count = record.citing_count;
}

EnrichSummary enrich_article_dir(const std::filesystem::path& dir, MetadataService& service, std::size_t batch_size,
                                 const FetchOptions& options) {
  EnrichSummary summary;
  for (const auto& path : store::list_article_files(dir)) {
    auto articles = store::read_article_file(path);
    std::vector<Pmid> pmids;
    for (const auto& a : articles) {
      if (a.pmid) pmids.push_back(*a.pmid);
    }
    std::unordered_map<Pmid, EnrichmentRecord> by_pmid;
    for (const auto& batch : batch_pmids(pmids, batch_size)) {
      ++summary.batches;
      for (auto& r : fetch_enrichment(batch, service, options)) by_pmid[r.pmid] = std::move(r);
    }
    std::string body;
    for (auto& a : articles) {
      ++summary.articles;
      if (a.pmid) {
        ++summary.with_pmid;
        apply_record(a, by_pmid.at(*a.pmid));
      }
      body += store::article_to_line(a);
      body.push_back('\n');
    }
    util::write_file_atomic(path, body);
  }
  return summary;
}

}  // namespace pmcoa::enrich
