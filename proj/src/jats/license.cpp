#include "pmcoa/jats/license.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

namespace pmcoa::jats {
namespace {

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::toupper(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool all_digits(const std::string& t) {
  return std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

LicenseGroup classify_license(std::string_view license_raw) {
  std::vector<std::string> t = tokens(license_raw);

  // URL form: .../licenses/by-nc/4.0/ or .../publicdomain/zero/1.0/
  if (std::find(t.begin(), t.end(), "CREATIVECOMMONS") != t.end()) {
    if (auto it = std::find(t.begin(), t.end(), "PUBLICDOMAIN"); it != t.end()) {
      return (std::next(it) != t.end() && *std::next(it) == "ZERO") ? LicenseGroup::Commercial : LicenseGroup::Other;
    }
    auto it = std::find(t.begin(), t.end(), "LICENSES");
    if (it == t.end()) return LicenseGroup::Other;
    std::vector<std::string> rest{"CC"};
    rest.insert(rest.end(), std::next(it), t.end());
    t = std::move(rest);
  }

  if (t.size() >= 2 && t[0] == "CC" && t[1] == "0") {
    t.erase(t.begin() + 1);
    t[0] = "CC0";
  }
  std::erase_if(t, all_digits);
  if (t == std::vector<std::string>{"CC0"}) return LicenseGroup::Commercial;
  if (t.size() < 2 || t[0] != "CC" || t[1] != "BY") return LicenseGroup::Other;

  const std::vector<std::string> mods(t.begin() + 2, t.end());
  using V = std::vector<std::string>;
  if (mods.empty() || mods == V{"SA"} || mods == V{"ND"}) return LicenseGroup::Commercial;
  if (mods == V{"NC"} || mods == V{"NC", "SA"} || mods == V{"NC", "ND"}) return LicenseGroup::NonCommercial;
  return LicenseGroup::Other;
}

}  // namespace pmcoa::jats
