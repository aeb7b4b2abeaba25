#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pmcoa::util {

// Minimal POSIX ustar support. Entries are written with fixed metadata
// (mode 0644, uid/gid 0, mtime 0, empty owner names) so archives are
// byte-reproducible. Names longer than the ustar limit use a PAX `path`
// extended header.
class TarWriter {
 public:
  explicit TarWriter(std::ostream& out) : out_(out) {}

  void add_file(std::string_view name, std::string_view data);
  // Writes the two terminating zero blocks.
  void finish();

  std::uint64_t bytes_written() const noexcept { return written_; }

 private:
  void write_header(std::string_view name, std::uint64_t size, char type);
  void write_padded(std::string_view data);

  std::ostream& out_;
  std::uint64_t written_ = 0;
};

enum class TarEntryType { Regular, Directory, Symlink, Hardlink, Other };

struct TarEntryHeader {
  std::string name;
  std::uint64_t size = 0;
  TarEntryType type = TarEntryType::Regular;
  std::uint64_t header_offset = 0;  // byte offset of the member's (first) header block
};

// Pull-style tar reader over a byte source. `read` must fill up to n bytes and
// return the count actually read (0 at end of stream).
class TarReader {
 public:
  using ReadFn = std::function<std::size_t(char* buf, std::size_t n)>;

  explicit TarReader(ReadFn read, std::string source_name = "<tar>")
      : read_(std::move(read)), source_(std::move(source_name)) {}

  // Advances to the next entry header, skipping any unread data of the
  // previous entry. nullopt at the end-of-archive marker. Throws ParseError on
  // bad checksums or truncation.
  std::optional<TarEntryHeader> next();

  // Reads the full payload of the current entry.
  std::string read_data();

  std::uint64_t offset() const noexcept { return offset_; }
  // True once next() stopped at a zero block rather than at end of input.
  bool saw_end_marker() const noexcept { return end_marker_; }

 private:
  void read_exact(char* buf, std::size_t n, const char* what);
  void skip(std::uint64_t n);

  ReadFn read_;
  std::string source_;
  std::uint64_t offset_ = 0;
  std::uint64_t pending_ = 0;   // unread payload bytes of current entry
  std::uint64_t padding_ = 0;   // padding after the payload
  std::uint64_t current_header_ = 0;
  bool end_marker_ = false;
};

// Convenience: reader over an in-memory buffer.
TarReader make_memory_tar_reader(std::string_view buffer, std::string source_name = "<memory>");

}  // namespace pmcoa::util
