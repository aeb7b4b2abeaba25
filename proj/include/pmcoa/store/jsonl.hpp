#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "pmcoa/jats/article.hpp"

namespace pmcoa::store {

// Writes articles to out_dir/articles-00000.jsonl, articles-00001.jsonl, ...
// in input order, at most `max_per_file` per file. Each file is written
// atomically. Returns the written paths. Text must be valid UTF-8; an
// article that cannot be serialized raises SchemaError naming its accession id
// and nothing further is written.
std::vector<std::filesystem::path> write_article_jsonl(const std::vector<jats::ArticleDoc>& articles,
                                                       const std::filesystem::path& out_dir,
                                                       std::size_t max_per_file = 200);

std::string article_file_name(std::size_t index);

// articles-*.jsonl under `dir`, in name order.
std::vector<std::filesystem::path> list_article_files(const std::filesystem::path& dir);

std::vector<jats::ArticleDoc> read_article_file(const std::filesystem::path& path);

// Streams every article in name order. Malformed lines raise ParseError
// with location() = 1-based line number.
void for_each_article(const std::filesystem::path& dir, const std::function<void(const jats::ArticleDoc&)>& fn);

std::vector<jats::ArticleDoc> read_article_dir(const std::filesystem::path& dir);

// Serializes one article as a single JSON line (no trailing newline).
std::string article_to_line(const jats::ArticleDoc& article);

}  // namespace pmcoa::store
