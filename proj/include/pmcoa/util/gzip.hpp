#pragma once

#include <string>
#include <string_view>

namespace pmcoa::util {

// Inflates a gzip stream (concatenated members allowed). Throws ParseError on
// corrupt or truncated input.
std::string gunzip(std::string_view compressed);

// Deterministic gzip: mtime 0, no file name.
std::string gzip(std::string_view raw, int level = 6);

}  // namespace pmcoa::util
