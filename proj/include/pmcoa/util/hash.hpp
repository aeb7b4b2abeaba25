#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace pmcoa::util {

// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(std::string_view bytes);

// Streaming SHA-256 for content fingerprints spanning many files.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_file(const std::filesystem::path& path);

// 64-bit FNV-1a; used only for seeding, never for integrity.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pmcoa::util
