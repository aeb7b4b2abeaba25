#include <gtest/gtest.h>

#include <httplib.h>

#include <map>
#include <numeric>
#include <thread>

#include "fixtures.hpp"
#include "pmcoa/enrich/apply.hpp"
#include "pmcoa/enrich/entrez.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/store/jsonl.hpp"

namespace pmcoa::enrich {
namespace {

std::vector<Pmid> iota_ids(std::size_t n) {
  std::vector<Pmid> v(n);
  std::iota(v.begin(), v.end(), Pmid{1});
  return v;
}

TEST(BatchPmids, Lengths) {
  const auto b = batch_pmids(iota_ids(450), 200);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 200u);
  EXPECT_EQ(b[1].size(), 200u);
  EXPECT_EQ(b[2].size(), 50u);
  EXPECT_TRUE(batch_pmids({}, 200).empty());
  EXPECT_EQ(batch_pmids(iota_ids(200)).size(), 1u);
  EXPECT_THROW(batch_pmids(iota_ids(3), 0), ValidationError);
}

TEST(BatchPmids, ConcatenationPreservesOrder) {
  const auto ids = iota_ids(17);
  for (std::size_t size : {1u, 2u, 5u, 16u, 17u, 40u}) {
    std::vector<Pmid> joined;
    const auto batches = batch_pmids(ids, size);
    for (std::size_t i = 0; i < batches.size(); ++i) {
      EXPECT_LE(batches[i].size(), size);
      if (i + 1 < batches.size()) EXPECT_EQ(batches[i].size(), size);
      joined.insert(joined.end(), batches[i].begin(), batches[i].end());
    }
    EXPECT_EQ(joined, ids);
  }
}

std::map<Pmid, EnrichmentRecord> canned() {
  return {
      {1, {1, {"Humans", "Mice", "Humans"}, {10, 11}, 2}},
      {2, {2, {"Humans"}, {}, 0}},
      {3, {3, {"Humans", "Neoplasms"}, {12}, 1}},
  };
}

TEST(FetchEnrichment, KnownAndUnknownPmids) {
  CannedMetadataService svc(canned());
  const std::vector<Pmid> batch{1, 99, 3};
  const auto recs = fetch_enrichment(batch, svc);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].pmid, 1u);
  EXPECT_EQ(recs[0].mesh_terms, (std::vector<std::string>{"Humans", "Mice"}));  // deduplicated
  EXPECT_EQ(recs[0].citing_pmids, (std::vector<Pmid>{10, 11}));
  EXPECT_EQ(recs[0].citing_count, 2u);
  EXPECT_EQ(recs[1].pmid, 99u);
  EXPECT_TRUE(recs[1].mesh_terms.empty());
  EXPECT_TRUE(recs[1].citing_pmids.empty());
  EXPECT_EQ(recs[1].citing_count, 0u);
  EXPECT_EQ(recs[2].citing_count, recs[2].citing_pmids.size());
}

TEST(FetchEnrichment, MeshFrequencyOracle) {
  CannedMetadataService svc(canned());
  const std::vector<Pmid> batch{1, 2, 3};
  std::map<std::string, int> freq;
  for (const auto& r : fetch_enrichment(batch, svc)) {
    for (const auto& t : r.mesh_terms) ++freq[t];
  }
  EXPECT_EQ(freq["Humans"], 3);
  EXPECT_EQ(freq["Mice"], 1);
}

TEST(FetchEnrichment, BatchedEqualsSingleFetchOnUnion) {
  CannedMetadataService svc(canned());
  const std::vector<Pmid> all{3, 1, 2, 50};
  std::map<Pmid, EnrichmentRecord> merged;
  for (const auto& b : batch_pmids(all, 3)) {
    for (const auto& r : fetch_enrichment(b, svc)) merged[r.pmid] = r;
  }
  std::map<Pmid, EnrichmentRecord> single;
  for (const auto& r : fetch_enrichment(all, svc)) single[r.pmid] = r;
  EXPECT_EQ(merged, single);
  for (const auto& req : svc.requests()) EXPECT_LE(req.size(), 4u);
}

class FlakyService : public MetadataService {
 public:
  int failures = 0;
  int calls = 0;
  std::string efetch_body = "<PubmedArticleSet/>";
  std::string efetch_pubmed(std::span<const Pmid>) override {
    ++calls;
    if (failures-- > 0) throw ingest::TransportError("reset", true);
    return efetch_body;
  }
  std::string elink_cited_in(std::span<const Pmid>) override { return "<eLinkResult/>"; }
};

TEST(FetchEnrichment, TransportFailuresAreRetried) {
  FlakyService svc;
  svc.failures = 2;
  util::ManualClock clock;
  FetchOptions opt;
  opt.clock = &clock;
  opt.retry.max_retries = 3;
  const std::vector<Pmid> batch{5};
  EXPECT_EQ(fetch_enrichment(batch, svc, opt).size(), 1u);
  EXPECT_EQ(svc.calls, 3);

  FlakyService dead;
  dead.failures = 100;
  opt.retry.max_retries = 1;
  EXPECT_THROW(fetch_enrichment(batch, dead, opt), ingest::FetchError);
}

TEST(FetchEnrichment, MalformedXmlCarriesBatch) {
  FlakyService svc;
  svc.efetch_body = "<PubmedArticleSet><oops></PubmedArticleSet>";
  const std::vector<Pmid> batch{7, 8};
  try {
    fetch_enrichment(batch, svc);
    FAIL();
  } catch (const BatchParseError& e) {
    EXPECT_EQ(e.batch(), batch);
  }
}

TEST(FetchEnrichment, LogsRequestsAndResponses) {
  CannedMetadataService svc(canned());
  std::vector<std::string> log;
  FetchOptions opt;
  opt.log = [&](const std::string& line) { log.push_back(line); };
  const std::vector<Pmid> batch{1};
  fetch_enrichment(batch, svc, opt);
  EXPECT_EQ(log.size(), 4u);
}

TEST(HttpService, TalksToEutilsStyleServer) {
  const auto table = canned();
  httplib::Server server;
  std::vector<std::size_t> ids_per_request;
  std::mutex mu;
  auto parse_ids = [](const httplib::Request& req) {
    std::vector<Pmid> ids;
    for (auto [it, end] = req.params.equal_range("id"); it != end; ++it) {
      std::string v = it->second;
      std::size_t pos = 0;
      while (pos <= v.size()) {
        auto comma = v.find(',', pos);
        if (comma == std::string::npos) comma = v.size();
        ids.push_back(std::stoull(v.substr(pos, comma - pos)));
        pos = comma + 1;
      }
    }
    return ids;
  };
  server.Get("/eutils/efetch.fcgi", [&](const httplib::Request& req, httplib::Response& res) {
    const auto ids = parse_ids(req);
    {
      std::lock_guard lock(mu);
      ids_per_request.push_back(ids.size());
    }
    res.set_content(render_efetch_xml(ids, table), "text/xml");
  });
  server.Get("/eutils/elink.fcgi", [&](const httplib::Request& req, httplib::Response& res) {
    EXPECT_EQ(req.get_param_value("linkname"), "pubmed_pubmed_citedin");
    res.set_content(render_elink_xml(parse_ids(req), table), "text/xml");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpMetadataService svc("http://127.0.0.1:" + std::to_string(port) + "/eutils");
  const std::vector<Pmid> batch{1, 2, 3, 4};
  const auto recs = fetch_enrichment(batch, svc);
  server.stop();
  th.join();
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].citing_pmids, (std::vector<Pmid>{10, 11}));
  EXPECT_EQ(recs[2].mesh_terms, (std::vector<std::string>{"Humans", "Neoplasms"}));
  EXPECT_TRUE(recs[3].mesh_terms.empty());
  EXPECT_EQ(ids_per_request, (std::vector<std::size_t>{4}));
}

TEST(HttpService, ServerErrorIsTransient) {
  httplib::Server server;
  server.Get(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  HttpMetadataService svc("http://127.0.0.1:" + std::to_string(port));
  const std::vector<Pmid> batch{1};
  try {
    svc.efetch_pubmed(batch);
    FAIL();
  } catch (const ingest::TransportError& e) {
    EXPECT_TRUE(e.transient());
  }
  server.stop();
  th.join();
}

TEST(EnrichArticleDir, RewritesInPlace) {
  testing::TempDir dir;
  std::vector<jats::ArticleDoc> docs(3);
  docs[0].accession_id = "PMC1";
  docs[0].pmid = 1;
  docs[1].accession_id = "PMC2";
  docs[2].accession_id = "PMC3";
  docs[2].pmid = 3;
  store::write_article_jsonl(docs, dir.path(), 2);
  CannedMetadataService svc(canned());
  const auto summary = enrich_article_dir(dir.path(), svc, 200);
  EXPECT_EQ(summary.articles, 3u);
  EXPECT_EQ(summary.with_pmid, 2u);
  const auto back = store::read_article_dir(dir.path());
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].citing_count, 2u);
  EXPECT_TRUE(back[1].mesh_terms.empty());
  EXPECT_EQ(back[2].mesh_terms, (std::vector<std::string>{"Humans", "Neoplasms"}));
}

}  // namespace
}  // namespace pmcoa::enrich
