#include "pmcoa/shard/writer.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/hash.hpp"
#include "pmcoa/util/tar.hpp"

namespace fs = std::filesystem;

namespace pmcoa::shard {

void to_json(nlohmann::json& j, const ShardManifest& m) {
  nlohmann::json shards = nlohmann::json::array();
  for (const auto& s : m.shards) {
    shards.push_back({{"path", s.path}, {"sample_count", s.sample_count}, {"byte_size", s.byte_size}, {"sha256", s.sha256}});
  }
  j = {{"format", "pmcoa-shards/1"},
       {"subset_name", m.subset_name},
       {"filter_spec", m.filter_spec},
       {"samples_per_shard", m.samples_per_shard},
       {"total_samples", m.total_samples},
       {"shards", shards}};
}

void from_json(const nlohmann::json& j, ShardManifest& m) {
  m = {};
  m.subset_name = j.at("subset_name").get<std::string>();
  m.filter_spec = j.value("filter_spec", nlohmann::json());
  m.samples_per_shard = j.at("samples_per_shard").get<std::size_t>();
  m.total_samples = j.at("total_samples").get<std::size_t>();
  for (const auto& s : j.at("shards")) {
    m.shards.push_back({s.at("path").get<std::string>(), s.at("sample_count").get<std::size_t>(),
                        s.at("byte_size").get<std::uint64_t>(), s.value("sha256", "")});
  }
}

std::string shard_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "data-%06zu.tar", index);
  return buf;
}

ShardManifest load_manifest(const fs::path& path) {
  ShardManifest m;
  try {
    m = nlohmann::json::parse(util::read_file(path)).get<ShardManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": invalid manifest: " + e.what());
  }
  std::size_t sum = 0;
  for (const auto& s : m.shards) sum += s.sample_count;
  if (sum != m.total_samples) {
    throw SchemaError(path.string() + ": shard sample counts sum to " + std::to_string(sum) + ", manifest says " +
                      std::to_string(m.total_samples));
  }
  return m;
}

namespace {

struct Block {
  std::size_t index;
  std::vector<FigureSample> samples;
};

ShardInfo write_one(const Block& block, const fs::path& out_dir) {
  const auto name = shard_file_name(block.index);
  const auto final_path = out_dir / name;
  const auto tmp = out_dir / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    util::TarWriter tar(out);
    for (const auto& s : block.samples) {
      const std::string image = s.image.empty() ? util::read_file(s.image_path) : s.image;
      std::string meta;
      try {
        meta = s.metadata.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::strict);
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError("sample " + s.sample_key + ": metadata is not valid UTF-8: " + e.what());
      }
      tar.add_file(s.sample_key + ".jpg", image);
      tar.add_file(s.sample_key + ".txt", s.caption);
      tar.add_file(s.sample_key + ".json", meta);
    }
    tar.finish();
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  const int fd = ::open(tmp.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0 || ::fsync(fd) != 0) {
    if (fd >= 0) ::close(fd);
    throw IoError("fsync failed for " + tmp.string());
  }
  ::close(fd);
  fs::rename(tmp, final_path);
  return {name, block.samples.size(), fs::file_size(final_path), util::sha256_file(final_path)};
}

}  // namespace

ShardManifest write_shards(const SampleSource& source, const fs::path& out_dir, const WriteOptions& options) {
  if (options.samples_per_shard == 0) throw ValidationError("write_shards: samples_per_shard must be >= 1");
  if (options.workers == 0) throw ValidationError("write_shards: workers must be >= 1");
  fs::create_directories(out_dir);

  std::mutex mu;
  std::condition_variable cv_work, cv_space;
  std::deque<Block> queue;
  bool done = false;
  std::exception_ptr error;
  std::vector<ShardInfo> infos;
  std::size_t dispatched = 0;

  auto fail = [&](std::exception_ptr e) {
    std::lock_guard lock(mu);
    if (!error) error = e;
    cv_work.notify_all();
    cv_space.notify_all();
  };

  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < options.workers; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        Block block;
        {
          std::unique_lock lock(mu);
          cv_work.wait(lock, [&] { return !queue.empty() || done || error; });
          if (error || queue.empty()) return;
          block = std::move(queue.front());
          queue.pop_front();
          cv_space.notify_one();
        }
        try {
          auto info = write_one(block, out_dir);
          if (options.log) {
            options.log("wrote " + info.path + " (" + std::to_string(info.sample_count) + " samples)");
          }
          std::lock_guard lock(mu);
          if (infos.size() <= block.index) infos.resize(block.index + 1);
          infos[block.index] = std::move(info);
        } catch (...) {
          fail(std::current_exception());
          return;
        }
      }
    });
  }

  std::size_t total = 0;
  try {
    std::set<std::string> keys;
    Block block{0, {}};
    auto push = [&] {
      std::unique_lock lock(mu);
      cv_space.wait(lock, [&] { return queue.size() < options.workers || error; });
      if (error) return false;
      queue.push_back(std::move(block));
      ++dispatched;
      cv_work.notify_one();
      block = Block{dispatched, {}};
      return true;
    };
    bool ok = true;
    while (ok) {
      auto s = source();
      if (!s) break;
      if (!keys.insert(s->sample_key).second) throw ValidationError("duplicate sample key " + s->sample_key);
      block.samples.push_back(std::move(*s));
      ++total;
      if (block.samples.size() == options.samples_per_shard) ok = push();
    }
    if (ok && !block.samples.empty()) push();
  } catch (...) {
    fail(std::current_exception());
  }
  {
    std::lock_guard lock(mu);
    done = true;
    cv_work.notify_all();
  }
  workers.clear();

  auto cleanup = [&] {
    std::error_code ec;
    for (std::size_t i = 0; i < dispatched; ++i) {
      fs::remove(out_dir / shard_file_name(i), ec);
      fs::remove(out_dir / (shard_file_name(i) + ".tmp"), ec);
    }
  };
  if (error) {
    cleanup();
    std::rethrow_exception(error);
  }

  ShardManifest m;
  m.shards = std::move(infos);
  m.total_samples = total;
  m.samples_per_shard = options.samples_per_shard;
  m.subset_name = options.subset_name;
  m.filter_spec = options.filter_spec;
  try {
    util::write_file_atomic(out_dir / kManifestName, nlohmann::json(m).dump(2) + "\n");
  } catch (...) {
    cleanup();
    throw;
  }
  // Shards left over from an earlier, larger run would confuse directory listings.
  std::error_code ec;
  for (std::size_t i = m.shards.size();; ++i) {
    if (!fs::remove(out_dir / shard_file_name(i), ec)) break;
  }
  return m;
}

ShardManifest write_shards(std::vector<FigureSample> samples, const fs::path& out_dir, const WriteOptions& options) {
  std::size_t i = 0;
  return write_shards(
      [&]() -> std::optional<FigureSample> {
        if (i == samples.size()) return std::nullopt;
        return std::move(samples[i++]);
      },
      out_dir, options);
}

std::vector<std::string> list_shard_members(const fs::path& shard) {
  std::ifstream in(shard, std::ios::binary);
  if (!in) throw IoError("cannot open " + shard.string());
  util::TarReader tar(
      [&](char* buf, std::size_t n) {
        in.read(buf, static_cast<std::streamsize>(n));
        return static_cast<std::size_t>(in.gcount());
      },
      shard.string());
  std::vector<std::string> names;
  while (auto h = tar.next()) names.push_back(h->name);
  return names;
}

}  // namespace pmcoa::shard
