#include "pmcoa/util/tar.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <memory>

#include "pmcoa/error.hpp"

namespace pmcoa::util {
namespace {

constexpr std::size_t kBlock = 512;

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  // width includes the trailing NUL.
  std::string digits;
  do {
    digits.insert(digits.begin(), static_cast<char>('0' + (value & 7)));
    value >>= 3;
  } while (value != 0);
  if (digits.size() > width - 1) throw Error("tar: numeric field overflow");
  std::memset(field, '0', width - 1);
  std::memcpy(field + (width - 1 - digits.size()), digits.data(), digits.size());
  field[width - 1] = '\0';
}

std::uint64_t parse_octal(const char* field, std::size_t width) {
  // GNU base-256 extension for large sizes.
  if (static_cast<unsigned char>(field[0]) & 0x80) {
    std::uint64_t v = static_cast<unsigned char>(field[0]) & 0x7f;
    for (std::size_t i = 1; i < width; ++i) v = (v << 8) | static_cast<unsigned char>(field[i]);
    return v;
  }
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < width && (field[i] == ' ' || field[i] == '\0')) ++i;
  for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) v = (v << 3) | static_cast<std::uint64_t>(field[i] - '0');
  return v;
}

std::string cstr_field(const char* field, std::size_t width) {
  return std::string(field, strnlen(field, width));
}

std::uint64_t padded(std::uint64_t size) { return (size + kBlock - 1) / kBlock * kBlock; }

std::string pax_record(std::string_view key, std::string_view value) {
  // "%d %s=%s\n" where the length includes its own digits.
  const std::size_t base = key.size() + value.size() + 3;
  std::size_t len = base + 1;
  while (std::to_string(len).size() + base != len) len = std::to_string(len).size() + base;
  return std::to_string(len) + " " + std::string(key) + "=" + std::string(value) + "\n";
}

}  // namespace

void TarWriter::write_header(std::string_view name, std::uint64_t size, char type) {
  std::array<char, kBlock> h{};
  std::memcpy(h.data(), name.data(), std::min<std::size_t>(name.size(), 100));
  put_octal(h.data() + 100, 8, 0644);
  put_octal(h.data() + 108, 8, 0);
  put_octal(h.data() + 116, 8, 0);
  put_octal(h.data() + 124, 12, size);
  put_octal(h.data() + 136, 12, 0);
  h[156] = type;
  std::memcpy(h.data() + 257, "ustar", 6);  // magic incl. NUL
  h[263] = '0';
  h[264] = '0';
  std::memset(h.data() + 148, ' ', 8);
  unsigned sum = 0;
  for (char c : h) sum += static_cast<unsigned char>(c);
  put_octal(h.data() + 148, 7, sum);
  h[155] = ' ';
  out_.write(h.data(), kBlock);
  written_ += kBlock;
}

void TarWriter::write_padded(std::string_view data) {
  out_.write(data.data(), static_cast<std::streamsize>(data.size()));
  const std::uint64_t pad = padded(data.size()) - data.size();
  static const std::array<char, kBlock> zeros{};
  out_.write(zeros.data(), static_cast<std::streamsize>(pad));
  written_ += data.size() + pad;
}

void TarWriter::add_file(std::string_view name, std::string_view data) {
  if (name.empty()) throw ValidationError("tar: empty member name");
  if (name.size() > 100) {
    const std::string pax = pax_record("path", name);
    write_header("././@PaxHeader", pax.size(), 'x');
    write_padded(pax);
    write_header(name.substr(0, 100), data.size(), '0');
  } else {
    write_header(name, data.size(), '0');
  }
  write_padded(data);
  if (!out_) throw IoError("tar: write failed");
}

void TarWriter::finish() {
  static const std::array<char, 2 * kBlock> zeros{};
  out_.write(zeros.data(), zeros.size());
  written_ += zeros.size();
  out_.flush();
  if (!out_) throw IoError("tar: write failed");
}

void TarReader::read_exact(char* buf, std::size_t n, const char* what) {
  std::size_t got = 0;
  while (got < n) {
    const std::size_t r = read_(buf + got, n - got);
    if (r == 0) {
      throw ParseError(source_ + ": truncated tar while reading " + what + " of member at offset " +
                           std::to_string(current_header_),
                       static_cast<long long>(current_header_));
    }
    got += r;
  }
  offset_ += n;
}

void TarReader::skip(std::uint64_t n) {
  std::array<char, 1 << 14> buf{};
  while (n > 0) {
    const std::size_t chunk = static_cast<std::size_t>(std::min<std::uint64_t>(n, buf.size()));
    read_exact(buf.data(), chunk, "data");
    n -= chunk;
  }
}

std::optional<TarEntryHeader> TarReader::next() {
  skip(pending_ + padding_);
  pending_ = padding_ = 0;

  std::optional<std::string> pax_path;
  std::optional<std::string> gnu_long_name;
  while (true) {
    std::array<char, kBlock> h{};
    current_header_ = offset_;
    std::size_t got = 0;
    while (got < kBlock) {
      const std::size_t r = read_(h.data() + got, kBlock - got);
      if (r == 0) break;
      got += r;
    }
    offset_ += got;
    if (got == 0) return std::nullopt;  // tolerate archives without the zero trailer
    if (got < kBlock) {
      throw ParseError(source_ + ": truncated tar header at offset " + std::to_string(current_header_),
                       static_cast<long long>(current_header_));
    }
    if (std::all_of(h.begin(), h.end(), [](char c) { return c == 0; })) {
      end_marker_ = true;
      return std::nullopt;
    }

    const unsigned stored = static_cast<unsigned>(parse_octal(h.data() + 148, 8));
    unsigned sum = 0;
    for (std::size_t i = 0; i < kBlock; ++i) {
      sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(h[i]);
    }
    if (sum != stored) {
      throw ParseError(source_ + ": bad tar header checksum at offset " + std::to_string(current_header_),
                       static_cast<long long>(current_header_));
    }

    const std::uint64_t size = parse_octal(h.data() + 124, 12);
    const char type = h[156];
    if (type == 'x' || type == 'g' || type == 'L') {
      std::string payload(static_cast<std::size_t>(size), '\0');
      read_exact(payload.data(), payload.size(), "extended header");
      skip(padded(size) - size);
      if (type == 'L') {
        gnu_long_name = cstr_field(payload.data(), payload.size());
      } else if (type == 'x') {
        std::size_t p = 0;
        while (p < payload.size()) {
          const auto sp = payload.find(' ', p);
          if (sp == std::string::npos) break;
          const std::size_t len = std::stoul(payload.substr(p, sp - p));
          if (len == 0 || p + len > payload.size()) break;
          const std::string rec = payload.substr(sp + 1, len - (sp - p) - 2);
          const auto eq = rec.find('=');
          if (eq != std::string::npos && rec.substr(0, eq) == "path") pax_path = rec.substr(eq + 1);
          p += len;
        }
      }
      continue;
    }

    TarEntryHeader e;
    std::string name = cstr_field(h.data(), 100);
    const std::string prefix = cstr_field(h.data() + 345, 155);
    if (std::memcmp(h.data() + 257, "ustar", 5) == 0 && !prefix.empty()) name = prefix + "/" + name;
    if (gnu_long_name) name = *gnu_long_name;
    if (pax_path) name = *pax_path;
    e.name = std::move(name);
    e.size = size;
    e.header_offset = current_header_;
    switch (type) {
      case '0': case '\0': case '7': e.type = TarEntryType::Regular; break;
      case '5': e.type = TarEntryType::Directory; break;
      case '2': e.type = TarEntryType::Symlink; break;
      case '1': e.type = TarEntryType::Hardlink; break;
      default: e.type = TarEntryType::Other;
    }
    // Directories and links carry no payload even if size is set.
    pending_ = (e.type == TarEntryType::Directory || e.type == TarEntryType::Symlink ||
                e.type == TarEntryType::Hardlink)
                   ? 0
                   : size;
    padding_ = padded(pending_) - pending_;
    return e;
  }
}

std::string TarReader::read_data() {
  std::string data(static_cast<std::size_t>(pending_), '\0');
  read_exact(data.data(), data.size(), "data");
  pending_ = 0;
  return data;
}

TarReader make_memory_tar_reader(std::string_view buffer, std::string source_name) {
  auto pos = std::make_shared<std::size_t>(0);
  return TarReader(
      [buffer, pos](char* buf, std::size_t n) {
        const std::size_t take = std::min(n, buffer.size() - *pos);
        std::memcpy(buf, buffer.data() + *pos, take);
        *pos += take;
        return take;
      },
      std::move(source_name));
}

}  // namespace pmcoa::util
