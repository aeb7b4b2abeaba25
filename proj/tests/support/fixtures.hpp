#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "pmcoa/ingest/transport.hpp"
#include "pmcoa/jats/article.hpp"
#include "pmcoa/shard/sample.hpp"

namespace pmcoa::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Minimal JPEG-shaped bytes (SOI, SOF0 with the given size, seeded payload,
// EOI). Not decodable, but probe_image_size reads the dimensions.
std::string fake_jpeg(int width, int height, std::uint64_t seed, std::size_t payload = 256);

// .tar.gz holding the given (name, data) members, in order.
std::string make_tar_gz(const std::vector<std::pair<std::string, std::string>>& members);

struct FixtureFigure {
  std::string fig_id;     // <fig id>
  std::string href;       // <graphic xlink:href>
  std::string caption;    // empty: no <caption>
  std::vector<std::string> mention_paragraphs;  // paragraphs citing this fig
};

struct FixtureArticle {
  std::string accession_id;
  std::uint64_t pmid = 0;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  std::string category;
  std::string license;
  std::string journal = "Fixture Journal";
  std::string date = "2020-01-01";
  std::vector<FixtureFigure> figures;
  std::vector<std::string> extra_paragraphs;
};

std::string render_nxml(const FixtureArticle& a);

// Articles with `figures_per_article` images each, written as fake JPEGs under
// media_root/<accession>/. License groups cycle commercial, noncommercial, other.
std::vector<jats::ArticleDoc> synthetic_articles(std::size_t n_articles, std::size_t figures_per_article,
                                                 const std::filesystem::path& media_root, std::uint64_t seed = 1,
                                                 std::size_t image_payload = 256);

// Labels every figure of `articles`: global/local pairs cycle through a small
// fixed list where each local belongs to one global.
shard::LabelMap synthetic_labels(const std::vector<jats::ArticleDoc>& articles);

// Remote transport serving an in-memory map. Records request timestamps
// (steady clock) and can fail the first `fail_first` retrievals of a path.
class MockTransport final : public ingest::Transport {
 public:
  void put(const std::string& path, std::string bytes) { files_[path] = std::move(bytes); }
  void fail_first(const std::string& path, int n, bool transient = true) {
    failures_[path] = {n, transient};
  }
  void advertise_size(const std::string& path, std::uint64_t size) { sizes_[path] = size; }

  std::vector<std::string> list(const std::string& remote_dir) override;
  ingest::Retrieved retrieve(const std::string& remote_path) override;
  std::optional<std::uint64_t> size(const std::string& remote_path) override;

  std::size_t request_count() const;
  std::vector<std::chrono::steady_clock::time_point> timestamps() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> files_;
  std::map<std::string, std::pair<int, bool>> failures_;
  std::map<std::string, std::uint64_t> sizes_;
  std::vector<std::chrono::steady_clock::time_point> stamps_;
};

// Largest number of timestamps falling in any half-open window [t, t + width).
template <typename TimePoint, typename Duration>
std::size_t max_in_window(std::vector<TimePoint> stamps, Duration width) {
  std::sort(stamps.begin(), stamps.end());
  std::size_t best = 0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < stamps.size(); ++hi) {
    while (stamps[hi] - stamps[lo] >= width) ++lo;
    best = std::max(best, hi - lo + 1);
  }
  return best;
}

}  // namespace pmcoa::testing
