#include "pmcoa/label/taxonomy.hpp"

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/text.hpp"

namespace pmcoa::label {

extern const char* const kBuiltinTaxonomyJson;

std::string normalize_label(std::string_view raw) {
  std::string out;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t start = pos;
    const char32_t cp = util::next_code_point(raw, pos);
    if (cp == U'-' || util::is_unicode_space(cp)) continue;
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp >= U'A' && cp <= U'Z' ? cp + 32 : cp));
    } else {
      out.append(raw.substr(start, pos - start));
    }
  }
  return out;
}

Taxonomy Taxonomy::from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) throw SchemaError("taxonomy: expected an object mapping global concepts to local lists");
  Taxonomy t;
  for (const auto& [name, locals] : doc.items()) {
    const std::string g = normalize_label(name);
    if (g.empty()) throw ValidationError("taxonomy: empty global concept name");
    if (!t.global_index_.emplace(g, t.globals_.size()).second) {
      throw ValidationError("taxonomy: duplicate global concept '" + name + "'");
    }
    if (!locals.is_array()) throw SchemaError("taxonomy: locals of '" + name + "' must be an array");
    Global entry{name, {}};
    for (const auto& l : locals) {
      if (!l.is_string()) throw SchemaError("taxonomy: non-string local under '" + name + "'");
      const std::string display = l.get<std::string>();
      const std::string n = normalize_label(display);
      if (n.empty()) throw ValidationError("taxonomy: empty local concept under '" + name + "'");
      if (!t.local_index_.emplace(n, std::pair{t.globals_.size(), entry.locals.size()}).second) {
        throw ValidationError("taxonomy: local concept '" + display + "' appears more than once");
      }
      entry.locals.push_back(display);
    }
    t.globals_.push_back(std::move(entry));
  }
  return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::ordered_json::parse(util::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy t = from_json(nlohmann::ordered_json::parse(kBuiltinTaxonomyJson));
  return t;
}

nlohmann::ordered_json Taxonomy::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& g : globals_) j[g.name] = g.locals;
  return j;
}

std::size_t Taxonomy::local_count() const { return local_index_.size(); }

std::optional<std::string> Taxonomy::global_name(std::string_view label) const {
  const auto it = global_index_.find(normalize_label(label));
  if (it == global_index_.end()) return std::nullopt;
  return globals_[it->second].name;
}

std::optional<std::string> Taxonomy::local_name(std::string_view label) const {
  const auto it = local_index_.find(normalize_label(label));
  if (it == local_index_.end()) return std::nullopt;
  return globals_[it->second.first].locals[it->second.second];
}

std::optional<std::string> Taxonomy::parent_of(std::string_view local_label) const {
  const auto it = local_index_.find(normalize_label(local_label));
  if (it == local_index_.end()) return std::nullopt;
  return globals_[it->second.first].name;
}

}  // namespace pmcoa::label
