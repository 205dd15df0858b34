#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

// A small owning XML tree. Parsing goes through expat; the tree keeps
// qualified names and namespace declarations exactly as written so that
// embedded fragments (metadata statements, inline datastreams) survive a
// parse/serialize cycle.
namespace adore::xml {

inline constexpr std::string_view kXmlnsPrefix = "xmlns";

struct Attribute {
  std::string name;
  std::string value;
  bool operator==(const Attribute&) const = default;
};

struct Node;

struct Element {
  Element() = default;
  explicit Element(std::string qname) : name(std::move(qname)) {}

  std::string name;
  std::vector<Attribute> attributes;
  std::vector<Node> children;

  // Set by the parser (and by resolve_namespaces for built trees).
  std::string ns;
  std::string local;
  // Byte range of the element content in the parsed source.
  std::size_t content_begin = 0;
  std::size_t content_end = 0;

  const std::string* attribute(std::string_view qname) const;
  // Looks an attribute up by local name regardless of prefix.
  const std::string* attribute_local(std::string_view local_name) const;
  Element& set_attribute(std::string qname, std::string value);

  Element& add(Element child);
  Element& add_text(std::string text);
  Element& add_comment(std::string text);

  std::vector<const Element*> elements() const;
  std::vector<Element*> elements();
  const Element* first(std::string_view ns_uri, std::string_view local_name) const;
  // Concatenation of all descendant text.
  std::string text() const;
  bool has_text_children() const;
};

struct Text {
  std::string value;
};

struct Comment {
  std::string value;
};

struct Node {
  std::variant<Element, Text, Comment> value;

  const Element* element() const { return std::get_if<Element>(&value); }
  Element* element() { return std::get_if<Element>(&value); }
  const Text* text() const { return std::get_if<Text>(&value); }
};

struct ParseOptions {
  bool keep_comments = false;
};

// Throws Error(kMalformedXml) with expat's diagnostic on failure. Doctype
// declarations are refused.
Element parse(std::string_view bytes, ParseOptions options = {});

// Fills `ns`/`local` for a built tree from its xmlns attributes.
void resolve_namespaces(Element& root);

struct WriteOptions {
  bool declaration = true;
  bool indent = true;
};

std::string serialize(const Element& root, WriteOptions options = {});
// Appends the serialized element; indentation is applied only to subtrees
// without text children.
void write_element(std::string& out, const Element& element, int depth,
                   bool indent);

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

// Order-insensitive over attributes, whitespace-insensitive over text,
// prefix-insensitive over names; comments dropped. Two trees are
// structurally equal iff their canonical strings match.
std::string canonical(const Element& root);

}  // namespace adore::xml
