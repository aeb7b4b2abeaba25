#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "fixtures.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/store/jsonl.hpp"
#include "pmcoa/store/stats.hpp"
#include "pmcoa/util/fs.hpp"

namespace pmcoa::store {
namespace {

using jats::ArticleDoc;
using jats::FigureRecord;

ArticleDoc sample_article(int i) {
  ArticleDoc a;
  a.accession_id = "PMC" + std::to_string(i);
  if (i % 3) a.pmid = 1000 + i;
  a.title = "Title " + std::to_string(i) + " — ünïcode";
  a.abstract = "abs";
  a.keywords = {"x", "y"};
  if (i % 2) a.category = "Research";
  a.full_text = "full text body " + std::to_string(i);
  a.license_raw = "CC BY";
  a.license_group = jats::LicenseGroup::Commercial;
  a.date = "2021-03-04";
  FigureRecord f;
  f.image_id = "g" + std::to_string(i);
  f.fig_id = "F1";
  f.image_file = f.image_id + ".jpg";
  f.caption = "caption";
  f.mentions = {"m1", "m2"};
  f.image_hash = "ab";
  f.width = 3;
  f.height = 4;
  a.figure_set = {f};
  a.mesh_terms = {"Humans"};
  a.citing_pmids = {5, 6};
  a.citing_count = 2;
  return a;
}

TEST(WriteArticleJsonl, CappedFiles) {
  testing::TempDir dir;
  std::vector<ArticleDoc> docs;
  for (int i = 0; i < 401; ++i) docs.push_back(sample_article(i));
  const auto paths = write_article_jsonl(docs, dir.path(), 200);
  ASSERT_EQ(paths.size(), 3u);
  EXPECT_EQ(paths[0].filename(), "articles-00000.jsonl");
  EXPECT_EQ(paths[2].filename(), "articles-00002.jsonl");
  std::vector<std::size_t> lines;
  for (const auto& p : paths) {
    const auto text = util::read_file(p);
    lines.push_back(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
  }
  EXPECT_EQ(lines, (std::vector<std::size_t>{200, 200, 1}));
}

TEST(WriteArticleJsonl, EmptyInputWritesNothing) {
  testing::TempDir dir;
  EXPECT_TRUE(write_article_jsonl({}, dir.path()).empty());
  EXPECT_TRUE(list_article_files(dir.path()).empty());
}

TEST(WriteArticleJsonl, RoundTripIsIdentityAndOrderPreserved) {
  testing::TempDir dir;
  std::vector<ArticleDoc> docs;
  for (int i = 0; i < 7; ++i) docs.push_back(sample_article(i));
  write_article_jsonl(docs, dir.path(), 3);
  EXPECT_EQ(read_article_dir(dir.path()), docs);
}

TEST(WriteArticleJsonl, InvalidUtf8NamesAccession) {
  testing::TempDir dir;
  auto bad = sample_article(1);
  bad.accession_id = "PMC777";
  bad.title = std::string("bad \xC3\x28 bytes");
  try {
    write_article_jsonl({sample_article(0), bad}, dir.path());
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("PMC777"), std::string::npos);
  }
  EXPECT_TRUE(list_article_files(dir.path()).empty());
}

TEST(ReadArticleFile, MalformedLineReportsLineNumber) {
  testing::TempDir dir;
  util::write_file_atomic(dir / "articles-00000.jsonl", article_to_line(sample_article(0)) + "\n{broken\n");
  try {
    read_article_dir(dir.path());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 2);
  }
}

TEST(ComputeStats, SingleCaption) {
  ArticleDoc a;
  FigureRecord f;
  f.caption = "a b c";
  a.figure_set = {f};
  const auto s = compute_stats({a}, WhitespaceTokenizer{});
  EXPECT_FALSE(s.empty);
  EXPECT_EQ(s.caption_tokens.min, 3);
  EXPECT_EQ(s.caption_tokens.max, 3);
  EXPECT_EQ(s.caption_tokens.median, 3);
}

TEST(ComputeStats, TwoCaptionsMedianAndTotal) {
  ArticleDoc a;
  FigureRecord f1, f2;
  f1.caption = "one two";
  f2.caption = "1 2 3 4 5 6 7 8 9 10";
  a.figure_set = {f1, f2};
  const auto s = compute_stats({a}, WhitespaceTokenizer{});
  EXPECT_EQ(s.caption_tokens.median, 6);
  EXPECT_EQ(s.caption_tokens.total, 12);
  EXPECT_EQ(s.pair_count, 2u);
}

TEST(ComputeStats, EmptyStreamIsFlagged) {
  const auto s = compute_stats(std::vector<ArticleDoc>{}, WhitespaceTokenizer{});
  EXPECT_TRUE(s.empty);
  EXPECT_EQ(s.caption_tokens.total, 0);
  EXPECT_EQ(s.articles_total, 0u);
}

TEST(ComputeStats, MatchesBruteForceRecomputation) {
  std::vector<ArticleDoc> docs;
  for (int i = 0; i < 9; ++i) {
    ArticleDoc a;
    for (int k = 0; k < i % 4; ++k) {
      FigureRecord f;
      f.caption = std::string(static_cast<std::size_t>(i + k), 'w');
      for (int t = 0; t < k; ++t) f.caption += " w";
      f.mentions.assign(static_cast<std::size_t>(k), "a mention paragraph");
      f.width = 10 * (k + 1);
      f.height = 5 + i;
      a.figure_set.push_back(f);
    }
    a.full_text = std::string(static_cast<std::size_t>(i), 'x');
    docs.push_back(a);
  }
  const auto s = compute_stats(docs, WhitespaceTokenizer{});
  // Brute force: collect, sort, interpolate by hand.
  std::vector<double> tok;
  std::size_t mentions = 0, text_only = 0;
  double area_total = 0;
  for (const auto& a : docs) {
    if (a.figure_set.empty()) ++text_only;
    for (const auto& f : a.figure_set) {
      tok.push_back(1.0 + static_cast<double>(std::count(f.caption.begin(), f.caption.end(), ' ')));
      mentions += f.mentions.size();
      area_total += static_cast<double>(*f.width) * *f.height;
    }
  }
  std::sort(tok.begin(), tok.end());
  const double pos = 0.5 * static_cast<double>(tok.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double median = tok[lo] + (pos - static_cast<double>(lo)) * (tok[std::min(lo + 1, tok.size() - 1)] - tok[lo]);
  EXPECT_DOUBLE_EQ(s.caption_tokens.median, median);
  EXPECT_DOUBLE_EQ(s.caption_tokens.min, tok.front());
  EXPECT_DOUBLE_EQ(s.caption_tokens.max, tok.back());
  EXPECT_EQ(s.mention_count, mentions);
  EXPECT_EQ(s.articles_text_only, text_only);
  EXPECT_DOUBLE_EQ(s.image_area.total, area_total);
  EXPECT_LE(s.caption_tokens.min, s.caption_tokens.median);
  EXPECT_LE(s.caption_tokens.median, s.caption_tokens.max);
}

}  // namespace
}  // namespace pmcoa::store
