#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pmcoa/ingest/file_list.hpp"
#include "pmcoa/jats/article.hpp"
#include "pmcoa/jats/xml.hpp"

namespace pmcoa::jats {

struct ParsedArticle {
  ArticleDoc doc;
  std::vector<std::string> warnings;
};

// Caption of the <fig> whose <graphic> href equals `image_id`, comparing with
// known media extensions stripped on both sides. Empty when nothing matches.
// When several figs match, the first in document order wins and a warning is
// appended.
std::string match_caption(const XmlNode& root, std::string_view image_id,
                          std::vector<std::string>* warnings = nullptr);

// Plain text of each article paragraph that holds an <xref ref-type="fig"> whose
// (space-separated) rid includes `fig_rid`. Document order; a paragraph
// appears once however many matching xrefs it holds. Paragraphs inside
// <fig> elements are not mentions.
std::vector<std::string> extract_mentions(const XmlNode& root, std::string_view fig_rid);

// Drops a trailing media extension (.jpg, .jpeg, .png, .gif, .tif, .tiff,
// .eps, .svg, .bmp, .webp), case-insensitively. Other dotted suffixes such as
// ".g001" are part of the id and are kept.
std::string strip_media_extension(std::string_view name);

// Builds the article record. `media_dir` is the directory holding the
// article's images (normally the nXML's directory). Metadata from the file
// list takes precedence over the nXML front matter when present.
ParsedArticle parse_article(std::string_view nxml_bytes, const std::filesystem::path& media_dir,
                            const ingest::FileListEntry* entry = nullptr);

}  // namespace pmcoa::jats
