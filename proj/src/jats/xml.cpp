#include "pmcoa/jats/xml.hpp"

#include <expat.h>

#include <unordered_map>

#include "pmcoa/error.hpp"
#include "pmcoa/util/text.hpp"

namespace pmcoa::jats {

const std::string* XmlNode::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

const XmlNode* XmlNode::find_first(std::string_view n) const {
  for (const auto& c : children) {
    if (c.kind != Kind::Element) continue;
    if (c.name == n) return &c;
    if (const XmlNode* hit = c.find_first(n)) return hit;
  }
  return nullptr;
}

namespace {

void collect(const XmlNode& node, std::string_view n, std::vector<const XmlNode*>& out) {
  for (const auto& c : node.children) {
    if (c.kind != XmlNode::Kind::Element) continue;
    if (c.name == n) out.push_back(&c);
    collect(c, n, out);
  }
}

void gather_text(const XmlNode& node, std::string& out) {
  if (node.kind == XmlNode::Kind::Text) {
    if (!out.empty()) out.push_back(' ');
    out += node.text;
    return;
  }
  for (const auto& c : node.children) gather_text(c, out);
}

void walk_impl(const XmlNode& node, std::vector<const XmlNode*>& ancestors,
               const std::function<void(const XmlNode&, const std::vector<const XmlNode*>&)>& visit) {
  visit(node, ancestors);
  if (node.kind != XmlNode::Kind::Element) return;
  ancestors.push_back(&node);
  for (const auto& c : node.children) walk_impl(c, ancestors, visit);
  ancestors.pop_back();
}

// Entities commonly left undefined when the JATS DTD is not loaded.
const std::unordered_map<std::string_view, std::string_view>& html_entities() {
  static const std::unordered_map<std::string_view, std::string_view> table = {
      {"nbsp", " "}, {"ndash", "–"}, {"mdash", "—"}, {"hellip", "…"},
      {"lsquo", "‘"}, {"rsquo", "’"}, {"ldquo", "“"}, {"rdquo", "”"},
      {"times", "×"}, {"plusmn", "±"}, {"deg", "°"}, {"micro", "µ"},
      {"alpha", "α"}, {"beta", "β"}, {"gamma", "γ"}, {"mu", "μ"},
      {"le", "≤"}, {"ge", "≥"}, {"thinsp", " "}, {"minus", "−"},
  };
  return table;
}

struct Builder {
  XmlNode root;
  std::vector<XmlNode*> stack;
  bool have_root = false;

  void append_text(std::string_view s) {
    if (stack.empty()) return;
    auto& kids = stack.back()->children;
    if (!kids.empty() && kids.back().kind == XmlNode::Kind::Text) {
      kids.back().text.append(s);
    } else {
      XmlNode t;
      t.kind = XmlNode::Kind::Text;
      t.text = std::string(s);
      kids.push_back(std::move(t));
    }
  }
};

void XMLCALL on_start(void* ud, const XML_Char* name, const XML_Char** atts) {
  auto* b = static_cast<Builder*>(ud);
  XmlNode n;
  n.name = name;
  for (int i = 0; atts[i] != nullptr; i += 2) n.attributes.emplace_back(atts[i], atts[i + 1]);
  if (b->stack.empty()) {
    b->root = std::move(n);
    b->have_root = true;
    b->stack.push_back(&b->root);
  } else {
    auto& kids = b->stack.back()->children;
    kids.push_back(std::move(n));
    b->stack.push_back(&kids.back());
  }
}

void XMLCALL on_end(void* ud, const XML_Char*) { static_cast<Builder*>(ud)->stack.pop_back(); }

void XMLCALL on_chars(void* ud, const XML_Char* s, int len) {
  static_cast<Builder*>(ud)->append_text(std::string_view(s, static_cast<std::size_t>(len)));
}

void XMLCALL on_skipped(void* ud, const XML_Char* name, int is_param) {
  if (is_param) return;
  const auto& table = html_entities();
  if (auto it = table.find(name); it != table.end()) static_cast<Builder*>(ud)->append_text(it->second);
}

}  // namespace

std::vector<const XmlNode*> XmlNode::find_all(std::string_view n) const {
  std::vector<const XmlNode*> out;
  collect(*this, n, out);
  return out;
}

const XmlNode* XmlNode::child(std::string_view n) const {
  for (const auto& c : children) {
    if (c.kind == Kind::Element && c.name == n) return &c;
  }
  return nullptr;
}

std::string plain_text(const XmlNode& node) {
  std::string raw;
  gather_text(node, raw);
  return util::collapse_whitespace(raw);
}

void walk(const XmlNode& root,
          const std::function<void(const XmlNode&, const std::vector<const XmlNode*>&)>& visit) {
  std::vector<const XmlNode*> ancestors;
  walk_impl(root, ancestors, visit);
}

XmlNode parse_xml(std::string_view bytes) {
  Builder b;
  XML_Parser p = XML_ParserCreate(nullptr);
  if (p == nullptr) throw Error("xml: cannot create parser");
  XML_SetUserData(p, &b);
  XML_SetElementHandler(p, on_start, on_end);
  XML_SetCharacterDataHandler(p, on_chars);
  XML_SetSkippedEntityHandler(p, on_skipped);
  XML_SetParamEntityParsing(p, XML_PARAM_ENTITY_PARSING_NEVER);
  const auto status = XML_Parse(p, bytes.data(), static_cast<int>(bytes.size()), XML_TRUE);
  if (status != XML_STATUS_OK) {
    const long long offset = XML_GetCurrentByteIndex(p);
    const std::string msg = std::string("xml: ") + XML_ErrorString(XML_GetErrorCode(p)) + " at byte " +
                            std::to_string(offset) + " (line " + std::to_string(XML_GetCurrentLineNumber(p)) + ")";
    XML_ParserFree(p);
    throw ParseError(msg, offset);
  }
  XML_ParserFree(p);
  if (!b.have_root) throw ParseError("xml: no root element", 0);
  return std::move(b.root);
}

}  // namespace pmcoa::jats
