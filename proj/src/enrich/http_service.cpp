#include <httplib.h>

#include "pmcoa/enrich/entrez.hpp"

namespace pmcoa::enrich {
namespace {

std::string id_params(std::span<const Pmid> pmids, bool repeated) {
  std::string q;
  for (std::size_t i = 0; i < pmids.size(); ++i) {
    if (repeated) {
      q += "&id=" + std::to_string(pmids[i]);
    } else {
      q += (i == 0 ? "&id=" : ",") + std::to_string(pmids[i]);
    }
  }
  return q;
}

}  // namespace

HttpMetadataService::HttpMetadataService(std::string base_url, std::string tool, std::string email)
    : base_url_(std::move(base_url)), tool_(std::move(tool)), email_(std::move(email)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::string HttpMetadataService::get(const std::string& path_and_query) {
  // Split "scheme://host[:port]/prefix" into client address and path prefix.
  const auto scheme_end = base_url_.find("://");
  const auto path_start = base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
  const std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  std::string query = path_and_query + "&tool=" + tool_;
  if (!email_.empty()) query += "&email=" + email_;
  auto res = client.Get(prefix + query);
  if (!res) {
    throw ingest::TransportError("entrez: " + httplib::to_string(res.error()), true);
  }
  if (res->status >= 400) {
    throw ingest::TransportError("entrez: HTTP " + std::to_string(res->status),
                                 res->status >= 500 || res->status == 429);
  }
  return res->body;
}

std::string HttpMetadataService::efetch_pubmed(std::span<const Pmid> pmids) {
  return get("/efetch.fcgi?db=pubmed&retmode=xml" + id_params(pmids, false));
}

std::string HttpMetadataService::elink_cited_in(std::span<const Pmid> pmids) {
  return get("/elink.fcgi?dbfrom=pubmed&db=pubmed&linkname=pubmed_pubmed_citedin" + id_params(pmids, true));
}

}  // namespace pmcoa::enrich
