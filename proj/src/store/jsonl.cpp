#include "pmcoa/store/jsonl.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"

namespace pmcoa::store {

std::string article_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "articles-%05zu.jsonl", index);
  return buf;
}

std::string article_to_line(const jats::ArticleDoc& article) {
  try {
    return nlohmann::json(article).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("cannot serialize article " + article.accession_id + ": " + e.what());
  }
}

std::vector<std::filesystem::path> write_article_jsonl(const std::vector<jats::ArticleDoc>& articles,
                                                       const std::filesystem::path& out_dir,
                                                       std::size_t max_per_file) {
  if (max_per_file == 0) throw ValidationError("write_article_jsonl: max_per_file must be >= 1");
  // Serialize everything first so a bad record leaves no partial output.
  std::vector<std::string> lines;
  lines.reserve(articles.size());
  for (const auto& a : articles) lines.push_back(article_to_line(a));

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t start = 0; start < lines.size(); start += max_per_file) {
    std::string body;
    const std::size_t end = std::min(lines.size(), start + max_per_file);
    for (std::size_t i = start; i < end; ++i) {
      body += lines[i];
      body.push_back('\n');
    }
    auto path = out_dir / article_file_name(paths.size());
    util::write_file_atomic(path, body);
    paths.push_back(std::move(path));
  }
  return paths;
}

std::vector<std::filesystem::path> list_article_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (auto& p : util::list_files(dir, ".jsonl")) {
    if (p.filename().string().starts_with("articles-")) out.push_back(std::move(p));
  }
  return out;
}

std::vector<jats::ArticleDoc> read_article_file(const std::filesystem::path& path) {
  const std::string data = util::read_file(path);
  std::vector<jats::ArticleDoc> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos) nl = data.size();
    ++line_no;
    std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<jats::ArticleDoc>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

void for_each_article(const std::filesystem::path& dir, const std::function<void(const jats::ArticleDoc&)>& fn) {
  for (const auto& p : list_article_files(dir)) {
    for (const auto& a : read_article_file(p)) fn(a);
  }
}

std::vector<jats::ArticleDoc> read_article_dir(const std::filesystem::path& dir) {
  std::vector<jats::ArticleDoc> out;
  for_each_article(dir, [&](const jats::ArticleDoc& a) { out.push_back(a); });
  return out;
}

}  // namespace pmcoa::store
