#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pmcoa::jats {

// Small immutable DOM built with expat. Namespace prefixes are kept verbatim
// in names ("xlink:href").
struct XmlNode {
  enum class Kind { Element, Text };

  Kind kind = Kind::Element;
  std::string name;  // element name; empty for text
  std::string text;  // character data for text nodes
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<XmlNode> children;

  bool is_element(std::string_view n) const { return kind == Kind::Element && name == n; }

  // nullptr when absent.
  const std::string* attribute(std::string_view key) const;

  // First descendant element (pre-order, excluding self) named `n`.
  const XmlNode* find_first(std::string_view n) const;

  // All descendant elements named `n`, document order (excluding self).
  std::vector<const XmlNode*> find_all(std::string_view n) const;

  // Child element named `n`.
  const XmlNode* child(std::string_view n) const;
};

// Tags dropped, text nodes joined with single spaces, runs of whitespace
// collapsed, ends trimmed.
std::string plain_text(const XmlNode& node);

// Parses a document and returns its root element. Malformed input throws
// ParseError whose location() is the byte offset of the failure. External
// DTDs are never fetched; undefined entities referenced from documents with
// an external subset are dropped.
XmlNode parse_xml(std::string_view bytes);

// Pre-order walk; `visit` receives the node and its element ancestors
// (outermost first, excluding the node itself).
void walk(const XmlNode& root,
          const std::function<void(const XmlNode&, const std::vector<const XmlNode*>&)>& visit);

}  // namespace pmcoa::jats
