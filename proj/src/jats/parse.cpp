#include "pmcoa/jats/parse.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>
#include <unordered_set>

#include "pmcoa/jats/license.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/hash.hpp"
#include "pmcoa/util/jpeg.hpp"
#include "pmcoa/util/text.hpp"

namespace fs = std::filesystem;

namespace pmcoa::jats {
namespace {

constexpr std::array<std::string_view, 10> kMediaExtensions = {"jpg", "jpeg", "png", "gif", "tif",
                                                               "tiff", "eps", "svg", "bmp", "webp"};
constexpr std::array<std::string_view, 6> kImageFileExtensions = {"jpg", "jpeg", "png", "gif", "tif", "tiff"};

const std::string* graphic_href(const XmlNode& g) {
  if (const auto* h = g.attribute("xlink:href")) return h;
  return g.attribute("href");
}

bool rid_includes(const std::string& rid, std::string_view wanted) {
  std::istringstream in(rid);
  for (std::string tok; in >> tok;) {
    if (tok == wanted) return true;
  }
  return false;
}

std::string text_of(const XmlNode* n) { return n ? plain_text(*n) : std::string(); }

std::string iso_date(const XmlNode& pub_date) {
  const std::string y = text_of(pub_date.child("year"));
  if (y.empty()) return {};
  std::string m = text_of(pub_date.child("month"));
  std::string d = text_of(pub_date.child("day"));
  auto pad = [](std::string s) { return s.size() == 1 ? "0" + s : s; };
  std::string out = y;
  if (!m.empty()) {
    out += "-" + pad(m);
    if (!d.empty()) out += "-" + pad(d);
  }
  return out;
}

std::string nxml_license(const XmlNode& meta) {
  const XmlNode* lic = meta.find_first("license");
  if (lic == nullptr) return {};
  if (const auto* href = lic->attribute("xlink:href")) return *href;
  if (const XmlNode* ref = lic->find_first("ali:license_ref")) return plain_text(*ref);
  if (const auto* type = lic->attribute("license-type")) return *type;
  if (const XmlNode* p = lic->find_first("license-p")) return plain_text(*p);
  return {};
}

struct MediaFile {
  std::string name;
  std::string stem;
};

std::vector<MediaFile> list_media(const fs::path& dir) {
  std::vector<MediaFile> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = util::lower_extension(e.path());
    if (std::find(kImageFileExtensions.begin(), kImageFileExtensions.end(), ext) == kImageFileExtensions.end()) {
      continue;
    }
    const std::string name = e.path().filename().string();
    out.push_back({name, strip_media_extension(name)});
  }
  std::sort(out.begin(), out.end(), [](const MediaFile& a, const MediaFile& b) { return a.name < b.name; });
  return out;
}

void load_image(FigureRecord& f, const fs::path& path) {
  const std::string bytes = util::read_file(path);
  f.image_hash = util::sha256_hex(bytes);
  if (auto sz = util::probe_image_size(bytes)) {
    f.width = sz->width;
    f.height = sz->height;
  }
}

}  // namespace

std::string strip_media_extension(std::string_view name) {
  const auto dot = name.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return std::string(name);
  const std::string ext = util::to_lower(name.substr(dot + 1));
  if (std::find(kMediaExtensions.begin(), kMediaExtensions.end(), ext) == kMediaExtensions.end()) {
    return std::string(name);
  }
  return std::string(name.substr(0, dot));
}

std::string match_caption(const XmlNode& root, std::string_view image_id, std::vector<std::string>* warnings) {
  const std::string wanted = strip_media_extension(image_id);
  const XmlNode* first = nullptr;
  int matches = 0;
  std::vector<const XmlNode*> figs = root.find_all("fig");
  if (root.is_element("fig")) figs.insert(figs.begin(), &root);
  for (const XmlNode* fig : figs) {
    for (const XmlNode* g : fig->find_all("graphic")) {
      const std::string* href = graphic_href(*g);
      if (href && strip_media_extension(*href) == wanted) {
        if (first == nullptr) first = fig;
        ++matches;
        break;
      }
    }
  }
  if (matches > 1 && warnings) {
    warnings->push_back("ambiguous figure id '" + wanted + "': " + std::to_string(matches) +
                        " figures reference it; using the first");
  }
  if (first == nullptr) return {};
  const XmlNode* caption = first->child("caption");
  if (caption == nullptr) caption = first->find_first("caption");
  return caption ? plain_text(*caption) : std::string();
}

std::vector<std::string> extract_mentions(const XmlNode& root, std::string_view fig_rid) {
  std::vector<std::string> out;
  if (fig_rid.empty()) return out;
  std::vector<const XmlNode*> paragraphs;
  std::unordered_set<const XmlNode*> seen;
  walk(root, [&](const XmlNode& n, const std::vector<const XmlNode*>& ancestors) {
    if (!n.is_element("xref")) return;
    const std::string* type = n.attribute("ref-type");
    const std::string* rid = n.attribute("rid");
    if (!type || *type != "fig" || !rid || !rid_includes(*rid, fig_rid)) return;
    const XmlNode* para = nullptr;
    for (auto it = ancestors.rbegin(); it != ancestors.rend(); ++it) {
      if ((*it)->is_element("fig")) return;
      if (para == nullptr && (*it)->is_element("p")) para = *it;
    }
    if (para && seen.insert(para).second) paragraphs.push_back(para);
  });
  out.reserve(paragraphs.size());
  for (const XmlNode* p : paragraphs) out.push_back(plain_text(*p));
  return out;
}

ParsedArticle parse_article(std::string_view nxml_bytes, const fs::path& media_dir,
                            const ingest::FileListEntry* entry) {
  const XmlNode root = parse_xml(nxml_bytes);
  ParsedArticle result;
  ArticleDoc& doc = result.doc;

  const XmlNode* front = root.find_first("front");
  const XmlNode* meta = front ? front->find_first("article-meta") : nullptr;
  const XmlNode* jmeta = front ? front->find_first("journal-meta") : nullptr;

  if (meta) {
    if (const XmlNode* tg = meta->find_first("title-group")) doc.title = text_of(tg->find_first("article-title"));
    if (const XmlNode* abs = meta->find_first("abstract")) doc.abstract = plain_text(*abs);
    for (const XmlNode* k : meta->find_all("kwd")) {
      std::string kw = plain_text(*k);
      if (!kw.empty()) doc.keywords.push_back(std::move(kw));
    }
    if (const XmlNode* cats = meta->find_first("article-categories")) {
      if (const XmlNode* subj = cats->find_first("subject")) doc.category = plain_text(*subj);
    }
    for (const XmlNode* id : meta->find_all("article-id")) {
      const std::string* type = id->attribute("pub-id-type");
      if (!type) continue;
      const std::string value = plain_text(*id);
      if (*type == "pmid" && !value.empty() &&
          std::all_of(value.begin(), value.end(), [](unsigned char c) { return std::isdigit(c); })) {
        doc.pmid = std::stoull(value);
      } else if ((*type == "pmc" || *type == "pmcid") && !value.empty()) {
        doc.accession_id = value.starts_with("PMC") ? value : "PMC" + value;
      }
    }
    for (const XmlNode* pd : meta->find_all("pub-date")) {
      doc.date = iso_date(*pd);
      if (!doc.date.empty()) break;
    }
    doc.license_raw = nxml_license(*meta);
  }
  if (jmeta) doc.journal = text_of(jmeta->find_first("journal-title"));
  if (const XmlNode* body = root.find_first("body")) doc.full_text = plain_text(*body);

  if (entry) {
    doc.accession_id = entry->accession_id;
    if (entry->pmid) doc.pmid = entry->pmid;
    if (!entry->date.empty()) doc.date = entry->date;
    if (!entry->license.empty()) doc.license_raw = entry->license;
    doc.citation = entry->citation;
  }
  doc.license_group = classify_license(doc.license_raw);

  // Figures: every <graphic> in document order, then unreferenced images on disk.
  const std::vector<MediaFile> media = list_media(media_dir);
  std::set<std::string> used_stems;
  walk(root, [&](const XmlNode& n, const std::vector<const XmlNode*>& ancestors) {
    if (!n.is_element("graphic")) return;
    const std::string* href = graphic_href(n);
    if (!href || href->empty()) return;
    FigureRecord f;
    f.image_id = strip_media_extension(*href);
    if (!used_stems.insert(f.image_id).second) return;
    for (auto it = ancestors.rbegin(); it != ancestors.rend(); ++it) {
      if ((*it)->is_element("fig")) {
        if (const auto* id = (*it)->attribute("id")) f.fig_id = *id;
        break;
      }
    }
    f.caption = match_caption(root, f.image_id, &result.warnings);
    f.mentions = extract_mentions(root, f.fig_id);

    const MediaFile* file = nullptr;
    for (const auto& m : media) {
      if (m.stem == f.image_id && (file == nullptr || util::lower_extension(m.name) == "jpg")) file = &m;
    }
    if (file) {
      f.image_file = file->name;
      load_image(f, media_dir / file->name);
    } else {
      f.image_file = *href == f.image_id ? *href + ".jpg" : *href;
      f.missing = true;
      result.warnings.push_back("graphic '" + *href + "' has no media file in " + media_dir.string());
    }
    doc.figure_set.push_back(std::move(f));
  });
  for (const auto& m : media) {
    if (used_stems.contains(m.stem)) continue;
    used_stems.insert(m.stem);
    FigureRecord f;
    f.image_id = m.stem;
    f.image_file = m.name;
    load_image(f, media_dir / m.name);
    doc.figure_set.push_back(std::move(f));
  }
  return result;
}

}  // namespace pmcoa::jats
