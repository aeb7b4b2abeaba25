#include "pmcoa/ingest/extract.hpp"

#include <algorithm>

#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/gzip.hpp"
#include "pmcoa/util/tar.hpp"

namespace fs = std::filesystem;

namespace pmcoa::ingest {
namespace {

// Member name as a relative path, or SecurityError.
fs::path safe_member_path(const std::string& name) {
  if (name.empty()) throw SecurityError("archive member with empty name");
  if (name.front() == '/' || name.front() == '\\' || (name.size() > 1 && name[1] == ':')) {
    throw SecurityError("archive member with absolute path: '" + name + "'");
  }
  fs::path rel;
  for (const auto& part : fs::path(name)) {
    if (part == "..") throw SecurityError("archive member escapes destination: '" + name + "'");
    if (part.empty() || part == ".") continue;
    rel /= part;
  }
  return rel;
}

struct Member {
  fs::path rel;
  std::string data;
};

}  // namespace

std::vector<fs::path> extract_package(const fs::path& archive, const DownloadPolicy& policy,
                                      const fs::path& dest_root, const std::string& accession_id) {
  if (accession_id.empty() || accession_id.find('/') != std::string::npos || accession_id == "..") {
    throw SecurityError("unsafe accession id: '" + accession_id + "'");
  }
  std::string raw;
  try {
    raw = util::gunzip(util::read_file(archive));
  } catch (const ParseError& e) {
    throw ExtractionError(archive.string() + ": " + e.what());
  }

  // Validate and buffer first; write only if every name is safe.
  std::vector<Member> kept;
  try {
    auto reader = util::make_memory_tar_reader(raw, archive.string());
    while (auto entry = reader.next()) {
      fs::path rel = safe_member_path(entry->name);
      if (entry->type != util::TarEntryType::Regular || rel.empty()) continue;
      if (!policy.keep_extensions.contains(util::lower_extension(rel))) continue;
      auto first = rel.begin();
      if (first != rel.end() && *first == accession_id && std::next(first) != rel.end()) {
        fs::path stripped;
        for (auto it = std::next(first); it != rel.end(); ++it) stripped /= *it;
        rel = stripped;
      }
      kept.push_back({rel, reader.read_data()});
    }
  } catch (const ParseError& e) {
    throw ExtractionError(std::string("corrupt archive: ") + e.what());
  }

  const fs::path dest = dest_root / accession_id;
  std::vector<fs::path> written;
  written.reserve(kept.size());
  for (auto& m : kept) {
    const fs::path target = dest / m.rel;
    util::write_file_atomic(target, m.data);
    written.push_back(target);
  }
  std::sort(written.begin(), written.end());
  written.erase(std::unique(written.begin(), written.end()), written.end());
  return written;
}

}  // namespace pmcoa::ingest
