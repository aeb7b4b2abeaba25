#include "pmcoa/enrich/entrez.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

#include "pmcoa/jats/xml.hpp"

namespace pmcoa::enrich {
namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string join_ids(std::span<const Pmid> pmids) {
  std::string s;
  for (std::size_t i = 0; i < pmids.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(pmids[i]);
  }
  return s;
}

std::optional<Pmid> to_pmid(const std::string& text) {
  Pmid v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace

std::vector<std::vector<Pmid>> batch_pmids(std::span<const Pmid> pmids, std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("batch_pmids: batch_size must be >= 1");
  std::vector<std::vector<Pmid>> out;
  for (std::size_t i = 0; i < pmids.size(); i += batch_size) {
    const std::size_t end = std::min(pmids.size(), i + batch_size);
    out.emplace_back(pmids.begin() + static_cast<std::ptrdiff_t>(i), pmids.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::string render_efetch_xml(std::span<const Pmid> pmids, const std::map<Pmid, EnrichmentRecord>& records) {
  std::string x = "<?xml version=\"1.0\" ?>\n<PubmedArticleSet>\n";
  for (Pmid id : pmids) {
    const auto it = records.find(id);
    if (it == records.end()) continue;  // Entrez silently omits unknown ids
    x += "<PubmedArticle><MedlineCitation Status=\"MEDLINE\"><PMID Version=\"1\">" + std::to_string(id) + "</PMID>";
    if (!it->second.mesh_terms.empty()) {
      x += "<MeshHeadingList>";
      for (const auto& term : it->second.mesh_terms) {
        x += "<MeshHeading><DescriptorName MajorTopicYN=\"N\">" + xml_escape(term) + "</DescriptorName></MeshHeading>";
      }
      x += "</MeshHeadingList>";
    }
    x += "</MedlineCitation></PubmedArticle>\n";
  }
  x += "</PubmedArticleSet>\n";
  return x;
}

std::string render_elink_xml(std::span<const Pmid> pmids, const std::map<Pmid, EnrichmentRecord>& records) {
  std::string x = "<?xml version=\"1.0\" ?>\n<eLinkResult>\n";
  for (Pmid id : pmids) {
    x += "<LinkSet><DbFrom>pubmed</DbFrom><IdList><Id>" + std::to_string(id) + "</Id></IdList>";
    const auto it = records.find(id);
    if (it != records.end() && !it->second.citing_pmids.empty()) {
      x += "<LinkSetDb><DbTo>pubmed</DbTo><LinkName>pubmed_pubmed_citedin</LinkName>";
      for (Pmid c : it->second.citing_pmids) x += "<Link><Id>" + std::to_string(c) + "</Id></Link>";
      x += "</LinkSetDb>";
    }
    x += "</LinkSet>\n";
  }
  x += "</eLinkResult>\n";
  return x;
}

std::string CannedMetadataService::efetch_pubmed(std::span<const Pmid> pmids) {
  {
    std::lock_guard lock(mu_);
    requests_.emplace_back(pmids.begin(), pmids.end());
  }
  return render_efetch_xml(pmids, records_);
}

std::string CannedMetadataService::elink_cited_in(std::span<const Pmid> pmids) {
  {
    std::lock_guard lock(mu_);
    requests_.emplace_back(pmids.begin(), pmids.end());
  }
  return render_elink_xml(pmids, records_);
}

std::vector<std::vector<Pmid>> CannedMetadataService::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::vector<EnrichmentRecord> fetch_enrichment(std::span<const Pmid> batch, MetadataService& service,
                                               const FetchOptions& options) {
  std::vector<EnrichmentRecord> out(batch.size());
  if (batch.empty()) return out;
  util::Clock& clock = options.clock ? *options.clock : util::SteadyClock::instance();
  const std::vector<Pmid> ids(batch.begin(), batch.end());
  const std::string label = "entrez batch [" + join_ids(batch) + "]";

  auto call = [&](const char* what, auto&& fn) {
    return ingest::with_retry(options.retry, clock, label, [&] {
      if (options.limiter) options.limiter->acquire();
      if (options.log) options.log(std::string(what) + " request " + label);
      std::string body = fn();
      if (options.log) options.log(std::string(what) + " response " + std::to_string(body.size()) + " bytes");
      return body;
    });
  };
  const std::string mesh_xml = call("efetch", [&] { return service.efetch_pubmed(ids); });
  const std::string link_xml = call("elink", [&] { return service.elink_cited_in(ids); });

  std::unordered_map<Pmid, std::size_t> index;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i].pmid = batch[i];
    index.emplace(batch[i], i);
  }

  jats::XmlNode mesh_root;
  jats::XmlNode link_root;
  try {
    mesh_root = jats::parse_xml(mesh_xml);
    link_root = jats::parse_xml(link_xml);
  } catch (const ParseError& e) {
    throw BatchParseError(label + ": malformed response: " + e.what(), ids);
  }
  if (mesh_root.name != "PubmedArticleSet") {
    throw BatchParseError(label + ": unexpected efetch root <" + mesh_root.name + ">", ids);
  }
  if (link_root.name != "eLinkResult") {
    throw BatchParseError(label + ": unexpected elink root <" + link_root.name + ">", ids);
  }

  for (const jats::XmlNode* art : mesh_root.find_all("MedlineCitation")) {
    const jats::XmlNode* pmid_node = art->child("PMID");
    if (!pmid_node) continue;
    const auto pmid = to_pmid(jats::plain_text(*pmid_node));
    if (!pmid) throw BatchParseError(label + ": non-numeric PMID in efetch response", ids);
    const auto it = index.find(*pmid);
    if (it == index.end()) continue;
    auto& terms = out[it->second].mesh_terms;
    std::unordered_set<std::string> seen(terms.begin(), terms.end());
    for (const jats::XmlNode* d : art->find_all("DescriptorName")) {
      std::string term = jats::plain_text(*d);
      if (!term.empty() && seen.insert(term).second) terms.push_back(std::move(term));
    }
  }

  for (const jats::XmlNode* set : link_root.find_all("LinkSet")) {
    const jats::XmlNode* idlist = set->child("IdList");
    if (!idlist) continue;
    const jats::XmlNode* id = idlist->child("Id");
    if (!id) continue;
    const auto pmid = to_pmid(jats::plain_text(*id));
    if (!pmid) throw BatchParseError(label + ": non-numeric Id in elink response", ids);
    const auto it = index.find(*pmid);
    if (it == index.end()) continue;
    auto& rec = out[it->second];
    for (const jats::XmlNode* db : set->find_all("LinkSetDb")) {
      const jats::XmlNode* name = db->child("LinkName");
      if (name && jats::plain_text(*name) != "pubmed_pubmed_citedin") continue;
      for (const jats::XmlNode* link : db->find_all("Link")) {
        const jats::XmlNode* lid = link->child("Id");
        if (!lid) continue;
        const auto citing = to_pmid(jats::plain_text(*lid));
        if (!citing) throw BatchParseError(label + ": non-numeric link Id in elink response", ids);
        rec.citing_pmids.push_back(*citing);
      }
    }
  }
  for (auto& r : out) r.citing_count = r.citing_pmids.size();
  return out;
}

}  // namespace pmcoa::enrich
