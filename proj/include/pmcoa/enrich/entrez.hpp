#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "pmcoa/error.hpp"
#include "pmcoa/ingest/rate_limiter.hpp"
#include "pmcoa/ingest/retry.hpp"

namespace pmcoa::enrich {

using Pmid = std::uint64_t;

struct EnrichmentRecord {
  Pmid pmid = 0;
  std::vector<std::string> mesh_terms;  // deduplicated, service order
  std::vector<Pmid> citing_pmids;
  std::uint64_t citing_count = 0;       // == citing_pmids.size()

  friend bool operator==(const EnrichmentRecord&, const EnrichmentRecord&) = default;
};

// Malformed service response; carries the batch that produced it.
class BatchParseError : public ParseError {
 public:
  BatchParseError(const std::string& what, std::vector<Pmid> batch)
      : ParseError(what), batch_(std::move(batch)) {}
  const std::vector<Pmid>& batch() const noexcept { return batch_; }

 private:
  std::vector<Pmid> batch_;
};

// Consecutive chunks of at most `batch_size`; all but the last are full.
// Throws ValidationError when batch_size == 0.
std::vector<std::vector<Pmid>> batch_pmids(std::span<const Pmid> pmids, std::size_t batch_size = 200);

// Entrez-style metadata endpoint. Both calls return raw XML: efetch yields a
// PubmedArticleSet, elink (linkname pubmed_pubmed_citedin, one LinkSet per
// id) an eLinkResult. Transport failures surface as ingest::TransportError.
class MetadataService {
 public:
  virtual ~MetadataService() = default;
  virtual std::string efetch_pubmed(std::span<const Pmid> pmids) = 0;
  virtual std::string elink_cited_in(std::span<const Pmid> pmids) = 0;
};

// HTTP client for an E-utilities base URL such as
// "https://eutils.ncbi.nlm.nih.gov/entrez/eutils".
class HttpMetadataService final : public MetadataService {
 public:
  explicit HttpMetadataService(std::string base_url, std::string tool = "pmcoa", std::string email = {});
  std::string efetch_pubmed(std::span<const Pmid> pmids) override;
  std::string elink_cited_in(std::span<const Pmid> pmids) override;

 private:
  std::string get(const std::string& path_and_query);
  std::string base_url_;
  std::string tool_;
  std::string email_;
};

// In-process service answering from a fixed table, rendered as genuine
// efetch/elink XML so the response parsers are exercised.
class CannedMetadataService final : public MetadataService {
 public:
  explicit CannedMetadataService(std::map<Pmid, EnrichmentRecord> records) : records_(std::move(records)) {}
  std::string efetch_pubmed(std::span<const Pmid> pmids) override;
  std::string elink_cited_in(std::span<const Pmid> pmids) override;

  // Every requested batch, in call order (efetch and elink each log once).
  std::vector<std::vector<Pmid>> requests() const;

 private:
  std::map<Pmid, EnrichmentRecord> records_;
  mutable std::mutex mu_;
  std::vector<std::vector<Pmid>> requests_;
};

std::string render_efetch_xml(std::span<const Pmid> pmids, const std::map<Pmid, EnrichmentRecord>& records);
std::string render_elink_xml(std::span<const Pmid> pmids, const std::map<Pmid, EnrichmentRecord>& records);

struct FetchOptions {
  ingest::RetrySchedule retry{};
  ingest::RateLimiter* limiter = nullptr;  // optional shared limiter
  util::Clock* clock = nullptr;            // defaults to the steady clock
  std::function<void(const std::string&)> log;  // request/response log sink
};

// One record per requested pmid, in request order. Unknown pmids produce
// empty records. Transport failures are retried per `options.retry`;
// unparseable responses raise BatchParseError.
std::vector<EnrichmentRecord> fetch_enrichment(std::span<const Pmid> batch, MetadataService& service,
                                               const FetchOptions& options = {});

}  // namespace pmcoa::enrich
