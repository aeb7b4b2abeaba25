#include "pmcoa/shard/benchmark.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"
#include "pmcoa/shard/reader.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/rng.hpp"

namespace fs = std::filesystem;

namespace pmcoa::shard {

void to_json(nlohmann::json& j, const IoModeResult& r) {
  j = {{"mode", r.mode},         {"samples", r.samples},           {"bytes", r.bytes},
       {"seconds", r.seconds},   {"samples_per_s", r.samples_per_s}, {"mb_per_s", r.mb_per_s}};
}

void to_json(nlohmann::json& j, const BenchmarkReport& r) {
  j = {{"sequential_shards", r.sequential}, {"random_files", r.random}, {"ratio", r.ratio}, {"cold_cache", r.cold_cache}};
}

void materialize_files(const fs::path& manifest_path, const fs::path& files_dir) {
  fs::create_directories(files_dir);
  auto stream = ShardStream::from_manifest(manifest_path);
  while (auto s = stream.next()) {
    util::write_file_atomic(files_dir / (s->sample_key + ".jpg"), s->image);
    util::write_file_atomic(files_dir / (s->sample_key + ".txt"), s->caption);
    util::write_file_atomic(files_dir / (s->sample_key + ".json"), s->metadata.dump());
  }
}

bool evict_page_cache(const fs::path& root) {
  bool ok = true;
  auto evict = [&](const fs::path& p) {
    const int fd = ::open(p.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) {
      ok = false;
      return;
    }
    ::fdatasync(fd);
    if (::posix_fadvise(fd, 0, 0, POSIX_FADV_DONTNEED) != 0) ok = false;
    ::close(fd);
  };
  if (fs::is_regular_file(root)) {
    evict(root);
    return ok;
  }
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) evict(e.path());
  }
  return ok;
}

namespace {

void finish(IoModeResult& r, std::chrono::steady_clock::duration d) {
  r.seconds = std::chrono::duration<double>(d).count();
  if (r.seconds > 0) {
    r.samples_per_s = static_cast<double>(r.samples) / r.seconds;
    r.mb_per_s = static_cast<double>(r.bytes) / 1e6 / r.seconds;
  }
}

std::uint64_t read_whole(const fs::path& p, std::string& buf) {
  const int fd = ::open(p.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw IoError("cannot open " + p.string());
  std::uint64_t total = 0;
  for (;;) {
    const ssize_t n = ::read(fd, buf.data(), buf.size());
    if (n < 0) {
      ::close(fd);
      throw IoError("read failed for " + p.string());
    }
    if (n == 0) break;
    total += static_cast<std::uint64_t>(n);
  }
  ::close(fd);
  return total;
}

}  // namespace

BenchmarkReport benchmark_io(const fs::path& manifest_path, const fs::path& files_dir, std::uint64_t seed) {
  const auto manifest = load_manifest(manifest_path);
  if (!fs::exists(files_dir) || fs::is_empty(files_dir)) materialize_files(manifest_path, files_dir);

  BenchmarkReport report;
  const fs::path shard_dir = manifest_path.parent_path();
  bool cold = evict_page_cache(shard_dir);

  report.sequential.mode = "sequential_shards";
  {
    const auto t0 = std::chrono::steady_clock::now();
    auto stream = ShardStream::from_manifest(manifest_path);
    while (stream.next()) ++report.sequential.samples;
    report.sequential.bytes = stream.bytes_read();
    finish(report.sequential, std::chrono::steady_clock::now() - t0);
  }

  // Sample keys in shard order, from the member lists.
  std::vector<std::string> keys;
  for (const auto& s : manifest.shards) {
    const auto members = list_shard_members(shard_dir / s.path);
    for (std::size_t i = 0; i < members.size(); i += 3) keys.push_back(members[i].substr(0, members[i].find('.')));
  }
  util::SplitMix64 rng(seed);
  util::shuffle(keys, rng);

  cold = evict_page_cache(files_dir) && cold;
  report.random.mode = "random_files";
  {
    std::string buf(1 << 16, '\0');
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& k : keys) {
      for (const char* ext : {".jpg", ".txt", ".json"}) report.random.bytes += read_whole(files_dir / (k + ext), buf);
      ++report.random.samples;
    }
    finish(report.random, std::chrono::steady_clock::now() - t0);
  }
  report.cold_cache = cold;
  report.ratio = report.random.samples_per_s > 0 ? report.sequential.samples_per_s / report.random.samples_per_s : 0;
  return report;
}

}  // namespace pmcoa::shard
