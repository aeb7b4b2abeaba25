#include "pmcoa/util/jpeg.hpp"

#include <cstdint>

namespace pmcoa::util {
namespace {

unsigned be16(std::string_view b, std::size_t i) {
  return (static_cast<unsigned char>(b[i]) << 8) | static_cast<unsigned char>(b[i + 1]);
}

std::uint32_t be32(std::string_view b, std::size_t i) {
  return (std::uint32_t{be16(b, i)} << 16) | be16(b, i + 2);
}

}  // namespace

std::optional<ImageSize> probe_image_size(std::string_view b) {
  if (b.size() >= 24 && b.substr(0, 8) == std::string_view("\x89PNG\r\n\x1a\n", 8) && b.substr(12, 4) == "IHDR") {
    return ImageSize{static_cast<int>(be32(b, 16)), static_cast<int>(be32(b, 20))};
  }
  if (b.size() < 4 || static_cast<unsigned char>(b[0]) != 0xFF || static_cast<unsigned char>(b[1]) != 0xD8) {
    return std::nullopt;
  }
  std::size_t i = 2;
  while (i + 4 <= b.size()) {
    if (static_cast<unsigned char>(b[i]) != 0xFF) return std::nullopt;
    const auto marker = static_cast<unsigned char>(b[i + 1]);
    if (marker == 0xFF) {  // fill byte
      ++i;
      continue;
    }
    if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) {
      i += 2;
      continue;
    }
    if (marker == 0xD9 || marker == 0xDA) return std::nullopt;  // EOI / SOS before any SOF
    const unsigned seg_len = be16(b, i + 2);
    const bool is_sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
    if (is_sof) {
      if (i + 9 > b.size()) return std::nullopt;
      const int h = static_cast<int>(be16(b, i + 5));
      const int w = static_cast<int>(be16(b, i + 7));
      return ImageSize{w, h};
    }
    i += 2 + seg_len;
  }
  return std::nullopt;
}

}  // namespace pmcoa::util
