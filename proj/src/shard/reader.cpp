#include "pmcoa/shard/reader.hpp"

#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"

namespace fs = std::filesystem;

namespace pmcoa::shard {

ShardStream::ShardStream(std::vector<fs::path> shards, std::size_t first_shard)
    : shards_(std::move(shards)), index_(first_shard) {
  if (index_ > shards_.size()) throw ValidationError("resume shard index beyond the shard list");
}

ShardStream ShardStream::from_manifest(const fs::path& manifest_path, std::size_t first_shard) {
  const auto m = load_manifest(manifest_path);
  std::vector<fs::path> paths;
  for (const auto& s : m.shards) paths.push_back(manifest_path.parent_path() / s.path);
  return ShardStream(std::move(paths), first_shard);
}

ShardStream ShardStream::resume(const fs::path& manifest_path, std::size_t consumed) {
  const auto m = load_manifest(manifest_path);
  if (consumed > m.total_samples) throw ValidationError("resume point beyond the manifest's total_samples");
  std::size_t shard = 0;
  while (shard < m.shards.size() && consumed >= m.shards[shard].sample_count) {
    consumed -= m.shards[shard].sample_count;
    ++shard;
  }
  auto stream = from_manifest(manifest_path, shard);
  for (std::size_t i = 0; i < consumed; ++i) stream.next();
  return stream;
}

bool ShardStream::open_next() {
  if (index_ >= shards_.size()) return false;
  const auto& path = shards_[index_];
  in_ = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*in_) throw IoError("cannot open shard " + path.string());
  auto* in = in_.get();
  tar_ = std::make_unique<util::TarReader>(
      [this, in](char* buf, std::size_t n) {
        in->read(buf, static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(in->gcount());
        bytes_ += got;
        return got;
      },
      path.string());
  return true;
}

namespace {

std::pair<std::string, std::string> split_member(const std::string& name) {
  const auto dot = name.find('.');
  if (dot == std::string::npos) return {name, ""};
  return {name.substr(0, dot), name.substr(dot + 1)};
}

}  // namespace

std::optional<FigureSample> ShardStream::next() {
  for (;;) {
    if (!tar_ && !open_next()) return std::nullopt;
    const auto shard = shards_[index_].string();
    auto first = tar_->next();
    if (!first) {
      if (!tar_->saw_end_marker()) {
        throw ParseError(shard + ": truncated, end-of-archive marker missing at offset " +
                             std::to_string(tar_->offset()),
                         static_cast<long long>(tar_->offset()));
      }
      tar_.reset();
      in_.reset();
      ++index_;
      continue;
    }
    FigureSample s;
    static constexpr const char* kExt[] = {"jpg", "txt", "json"};
    std::optional<util::TarEntryHeader> h = std::move(first);
    for (int part = 0; part < 3; ++part) {
      if (part > 0) h = tar_->next();
      if (!h) throw ParseError(shard + ": sample " + s.sample_key + " is incomplete at end of archive", tar_->offset());
      auto [key, ext] = split_member(h->name);
      if (part == 0) s.sample_key = key;
      if (key != s.sample_key || ext != kExt[part]) {
        throw ParseError(shard + ": unexpected member '" + h->name + "' at offset " +
                             std::to_string(h->header_offset),
                         static_cast<long long>(h->header_offset));
      }
      auto data = tar_->read_data();
      if (part == 0) {
        s.image = std::move(data);
      } else if (part == 1) {
        s.caption = std::move(data);
      } else {
        try {
          s.metadata = nlohmann::ordered_json::parse(data);
        } catch (const nlohmann::json::exception& e) {
          throw ParseError(shard + ": bad metadata in member at offset " + std::to_string(h->header_offset) + ": " +
                               e.what(),
                           static_cast<long long>(h->header_offset));
        }
      }
    }
    return s;
  }
}

std::vector<FigureSample> read_all(const fs::path& manifest_path) {
  auto stream = ShardStream::from_manifest(manifest_path);
  std::vector<FigureSample> out;
  while (auto s = stream.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace pmcoa::shard
