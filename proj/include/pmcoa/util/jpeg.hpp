#pragma once

#include <optional>
#include <string_view>

namespace pmcoa::util {

struct ImageSize {
  int width = 0;
  int height = 0;
};

// Reads pixel dimensions from a JPEG's SOFn marker (or a PNG IHDR chunk)
// without decoding. nullopt if the header cannot be found.
std::optional<ImageSize> probe_image_size(std::string_view bytes);

}  // namespace pmcoa::util
