#include "fixtures.hpp"

#include <atomic>
#include <sstream>

#include <unistd.h>

#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/gzip.hpp"
#include "pmcoa/util/hash.hpp"
#include "pmcoa/util/rng.hpp"
#include "pmcoa/util/tar.hpp"

namespace pmcoa::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("pmcoa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string fake_jpeg(int width, int height, std::uint64_t seed, std::size_t payload) {
  std::string b = "\xFF\xD8";
  // SOF0: length 17, precision 8, height, width, 3 components.
  b += std::string("\xFF\xC0\x00\x11\x08", 5);
  b.push_back(static_cast<char>((height >> 8) & 0xFF));
  b.push_back(static_cast<char>(height & 0xFF));
  b.push_back(static_cast<char>((width >> 8) & 0xFF));
  b.push_back(static_cast<char>(width & 0xFF));
  b += std::string("\x03\x01\x22\x00\x02\x11\x01\x03\x11\x01", 10);
  util::SplitMix64 rng(seed);
  for (std::size_t i = 0; i < payload; ++i) {
    char c = static_cast<char>(rng() & 0xFF);
    if (c == '\xFF') c = '\x00';
    b.push_back(c);
  }
  b += "\xFF\xD9";
  return b;
}

std::string make_tar_gz(const std::vector<std::pair<std::string, std::string>>& members) {
  std::ostringstream os;
  util::TarWriter w(os);
  for (const auto& [name, data] : members) w.add_file(name, data);
  w.finish();
  return util::gzip(os.str());
}

namespace {

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

}  // namespace

std::string render_nxml(const FixtureArticle& a) {
  std::string x;
  x = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<article xmlns:xlink=\"http://www.w3.org/1999/xlink\" article-type=\"research-article\">\n<front>\n"
      "<journal-meta><journal-title-group><journal-title>" + esc(a.journal) +
      "</journal-title></journal-title-group></journal-meta>\n<article-meta>\n";
  x += "<article-id pub-id-type=\"pmid\">" + std::to_string(a.pmid) + "</article-id>\n";
  x += "<article-id pub-id-type=\"pmc\">" + esc(a.accession_id) + "</article-id>\n";
  if (!a.category.empty()) {
    x += "<article-categories><subj-group subj-group-type=\"heading\"><subject>" + esc(a.category) +
         "</subject></subj-group></article-categories>\n";
  }
  x += "<title-group><article-title>" + esc(a.title) + "</article-title></title-group>\n";
  x += "<pub-date pub-type=\"epub\"><year>" + a.date.substr(0, 4) + "</year><month>" + a.date.substr(5, 2) +
       "</month><day>" + a.date.substr(8, 2) + "</day></pub-date>\n";
  x += "<permissions><license><license-p>" + esc(a.license) + "</license-p></license></permissions>\n";
  x += "<abstract><p>" + esc(a.abstract) + "</p></abstract>\n";
  if (!a.keywords.empty()) {
    x += "<kwd-group>";
    for (const auto& k : a.keywords) x += "<kwd>" + esc(k) + "</kwd>";
    x += "</kwd-group>\n";
  }
  x += "</article-meta>\n</front>\n<body>\n<sec><title>Results</title>\n";
  for (const auto& p : a.extra_paragraphs) x += "<p>" + esc(p) + "</p>\n";
  for (const auto& f : a.figures) {
    for (const auto& m : f.mention_paragraphs) {
      x += "<p>" + esc(m) + " (<xref ref-type=\"fig\" rid=\"" + f.fig_id + "\">Fig</xref>)</p>\n";
    }
  }
  for (const auto& f : a.figures) {
    x += "<fig id=\"" + f.fig_id + "\"><label>Figure</label>";
    if (!f.caption.empty()) x += "<caption><p>" + esc(f.caption) + "</p></caption>";
    x += "<graphic xlink:href=\"" + f.href + "\"/></fig>\n";
  }
  x += "</sec>\n</body>\n</article>\n";
  return x;
}

std::vector<std::string> MockTransport::list(const std::string& remote_dir) {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [k, v] : files_) {
    if (k.starts_with(remote_dir)) out.push_back(k);
  }
  return out;
}

ingest::Retrieved MockTransport::retrieve(const std::string& remote_path) {
  std::lock_guard lock(mu_);
  stamps_.push_back(std::chrono::steady_clock::now());
  auto f = failures_.find(remote_path);
  if (f != failures_.end() && f->second.first > 0) {
    --f->second.first;
    throw ingest::TransportError("mock failure for " + remote_path, f->second.second);
  }
  auto it = files_.find(remote_path);
  if (it == files_.end()) throw ingest::TransportError("no such file: " + remote_path, false);
  ingest::Retrieved r;
  r.bytes = it->second;
  auto s = sizes_.find(remote_path);
  if (s != sizes_.end()) r.expected_size = s->second;
  return r;
}

std::optional<std::uint64_t> MockTransport::size(const std::string& remote_path) {
  std::lock_guard lock(mu_);
  auto it = files_.find(remote_path);
  if (it == files_.end()) return std::nullopt;
  return it->second.size();
}

std::size_t MockTransport::request_count() const {
  std::lock_guard lock(mu_);
  return stamps_.size();
}

std::vector<std::chrono::steady_clock::time_point> MockTransport::timestamps() const {
  std::lock_guard lock(mu_);
  return stamps_;
}

std::vector<jats::ArticleDoc> synthetic_articles(std::size_t n_articles, std::size_t figures_per_article,
                                                 const std::filesystem::path& media_root, std::uint64_t seed,
                                                 std::size_t image_payload) {
  static const jats::LicenseGroup groups[] = {jats::LicenseGroup::Commercial, jats::LicenseGroup::NonCommercial,
                                              jats::LicenseGroup::Other};
  static const char* licenses[] = {"CC BY", "CC BY-NC", "NO-CC CODE"};
  std::vector<jats::ArticleDoc> out;
  for (std::size_t a = 0; a < n_articles; ++a) {
    jats::ArticleDoc doc;
    doc.accession_id = "PMC" + std::to_string(100000 + a);
    doc.pmid = 30000000 + a;
    doc.title = "Synthetic article " + std::to_string(a);
    doc.abstract = "Abstract of article " + std::to_string(a) + ".";
    doc.keywords = {"kw" + std::to_string(a % 5), "synthetic"};
    if (a % 2 == 0) doc.category = "Research Article";
    doc.full_text = "Body text " + std::to_string(a);
    doc.license_raw = licenses[a % 3];
    doc.license_group = groups[a % 3];
    doc.date = "2021-0" + std::to_string(1 + a % 9) + "-15";
    doc.journal = "J Synth " + std::to_string(a % 4);
    doc.citation = doc.journal + ". 2021;" + std::to_string(a);
    doc.nxml = doc.accession_id + "/article.nxml";
    doc.mesh_terms = {"Humans"};
    doc.citing_pmids = {1, 2};
    doc.citing_count = 2;
    for (std::size_t f = 0; f < figures_per_article; ++f) {
      jats::FigureRecord fig;
      fig.image_id = "fig." + std::to_string(f);
      fig.fig_id = "F" + std::to_string(f);
      fig.image_file = fig.image_id + ".jpg";
      fig.caption = "Caption " + std::to_string(a) + "." + std::to_string(f);
      fig.mentions = {"See Figure " + std::to_string(f) + "."};
      const auto bytes = fake_jpeg(32 + static_cast<int>(f), 24, util::mix_seed(seed, a * 1000 + f), image_payload);
      util::write_file_atomic(media_root / doc.accession_id / fig.image_file, bytes);
      fig.image_hash = util::sha256_hex(bytes);
      fig.width = 32 + static_cast<int>(f);
      fig.height = 24;
      doc.figure_set.push_back(std::move(fig));
    }
    out.push_back(std::move(doc));
  }
  return out;
}

shard::LabelMap synthetic_labels(const std::vector<jats::ArticleDoc>& articles) {
  static const std::pair<const char*, const char*> pairs[] = {{"Microscopy", "light microscopy"},
                                                             {"Plots and Charts", "barplot"},
                                                             {"Tables", "table"},
                                                             {"Clinical Imaging", "x-ray radiography"},
                                                             {"Maps", "map"}};
  shard::LabelMap out;
  std::size_t i = 0;
  for (const auto& a : articles) {
    for (const auto& f : a.figure_set) {
      const auto& [g, l] = pairs[i % 5];
      label::ResolvedClusterLabels r;
      r.cluster_id = static_cast<std::int64_t>(i % 5);
      r.annotator_count = 3;
      r.primary_global = g;
      r.primary_local = l;
      out[shard::make_sample_key(a.accession_id, f.image_id)] = r;
      ++i;
    }
  }
  return out;
}

}  // namespace pmcoa::testing

