#pragma once

#include <string_view>

#include "pmcoa/jats/article.hpp"

namespace pmcoa::jats {

// Groups a license string the way the PMC open-access listing does:
//   commercial:    CC0, CC BY, CC BY-SA, CC BY-ND
//   noncommercial: CC BY-NC, CC BY-NC-SA, CC BY-NC-ND
//   other:         anything else, including empty or custom licenses
// Case, whitespace, '_'/'-' separators and version numbers are ignored;
// creativecommons.org license URLs are understood too.
LicenseGroup classify_license(std::string_view license_raw);

}  // namespace pmcoa::jats
