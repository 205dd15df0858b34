#include "adore/xml.hpp"

#include <expat.h>

#include <algorithm>
#include <map>
#include <memory>

#include "adore/error.hpp"

namespace adore::xml {
namespace {

using Scope = std::vector<std::pair<std::string, std::string>>;

std::pair<std::string_view, std::string_view> split_qname(std::string_view q) {
  size_t colon = q.find(':');
  if (colon == std::string_view::npos) return {{}, q};
  return {q.substr(0, colon), q.substr(colon + 1)};
}

bool is_declaration(std::string_view name) {
  return name == kXmlnsPrefix || name.starts_with("xmlns:");
}

// Pushes the element's declarations onto `scope`; returns how many.
size_t push_declarations(const Element& e, Scope& scope) {
  size_t pushed = 0;
  for (const auto& a : e.attributes) {
    if (a.name == kXmlnsPrefix) {
      scope.emplace_back("", a.value);
      ++pushed;
    } else if (a.name.starts_with("xmlns:")) {
      scope.emplace_back(a.name.substr(6), a.value);
      ++pushed;
    }
  }
  return pushed;
}

const std::string* lookup(const Scope& scope, std::string_view prefix) {
  static const std::string kXml = "http://www.w3.org/XML/1998/namespace";
  static const std::string kNone;
  if (prefix == "xml") return &kXml;
  for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
    if (it->first == prefix) return &it->second;
  }
  return prefix.empty() ? &kNone : nullptr;
}

struct ParseState {
  XML_Parser parser = nullptr;
  ParseOptions options;
  std::vector<Element*> stack;
  Scope scope;
  std::vector<size_t> pushed;
  Element root;
  bool have_root = false;
  std::string error;
};

void stop(ParseState* st, std::string message) {
  if (st->error.empty()) st->error = std::move(message);
  XML_StopParser(st->parser, XML_FALSE);
}

void XMLCALL on_start(void* data, const XML_Char* name,
                      const XML_Char** attrs) {
  auto* st = static_cast<ParseState*>(data);
  if (!st->error.empty()) return;
  Element e(name);
  for (int i = 0; attrs[i]; i += 2) e.attributes.push_back({attrs[i], attrs[i + 1]});
  st->pushed.push_back(push_declarations(e, st->scope));
  auto [prefix, local] = split_qname(e.name);
  const std::string* uri = lookup(st->scope, prefix);
  if (!uri) return stop(st, "unbound namespace prefix in <" + e.name + ">");
  for (const auto& a : e.attributes) {
    if (is_declaration(a.name)) continue;
    auto [ap, al] = split_qname(a.name);
    if (!ap.empty() && !lookup(st->scope, ap))
      return stop(st, "unbound namespace prefix on attribute " + a.name);
  }
  e.ns = *uri;
  e.local = std::string(local);
  e.content_begin = static_cast<size_t>(XML_GetCurrentByteIndex(st->parser) +
                                        XML_GetCurrentByteCount(st->parser));
  if (st->stack.empty()) {
    st->root = std::move(e);
    st->have_root = true;
    st->stack.push_back(&st->root);
  } else {
    Element& parent = *st->stack.back();
    parent.children.push_back(Node{std::move(e)});
    st->stack.push_back(parent.children.back().element());
  }
}

void XMLCALL on_end(void* data, const XML_Char*) {
  auto* st = static_cast<ParseState*>(data);
  if (!st->error.empty()) return;
  Element* e = st->stack.back();
  auto idx = static_cast<size_t>(XML_GetCurrentByteIndex(st->parser));
  e->content_end = std::max(idx, e->content_begin);
  st->stack.pop_back();
  st->scope.resize(st->scope.size() - st->pushed.back());
  st->pushed.pop_back();
}

void XMLCALL on_chars(void* data, const XML_Char* s, int len) {
  auto* st = static_cast<ParseState*>(data);
  if (st->stack.empty() || !st->error.empty()) return;
  Element& e = *st->stack.back();
  if (!e.children.empty()) {
    if (auto* t = std::get_if<Text>(&e.children.back().value)) {
      t->value.append(s, static_cast<size_t>(len));
      return;
    }
  }
  e.children.push_back(Node{Text{std::string(s, static_cast<size_t>(len))}});
}

void XMLCALL on_comment(void* data, const XML_Char* s) {
  auto* st = static_cast<ParseState*>(data);
  if (!st->options.keep_comments || st->stack.empty()) return;
  st->stack.back()->children.push_back(Node{Comment{s}});
}

void XMLCALL on_doctype(void* data, const XML_Char*, const XML_Char*,
                        const XML_Char*, int) {
  stop(static_cast<ParseState*>(data), "doctype declarations are not accepted");
}

void resolve(Element& e, Scope& scope) {
  size_t pushed = push_declarations(e, scope);
  auto [prefix, local] = split_qname(e.name);
  const std::string* uri = lookup(scope, prefix);
  e.ns = uri ? *uri : std::string();
  e.local = std::string(local);
  for (auto& child : e.children) {
    if (auto* c = child.element()) resolve(*c, scope);
  }
  scope.resize(scope.size() - pushed);
}

void indent_to(std::string& out, int depth) {
  out.push_back('\n');
  out.append(static_cast<size_t>(depth) * 2, ' ');
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (space) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

void canonical_into(const Element& e, Scope& scope, std::string& out) {
  size_t pushed = push_declarations(e, scope);
  auto [prefix, local] = split_qname(e.name);
  const std::string* uri = lookup(scope, prefix);
  out += "<{";
  out += uri ? *uri : "?" + std::string(prefix);
  out += "}";
  out += local;
  std::map<std::string, std::string> attrs;
  for (const auto& a : e.attributes) {
    if (is_declaration(a.name)) continue;
    auto [ap, al] = split_qname(a.name);
    std::string key;
    if (!ap.empty()) {
      const std::string* auri = lookup(scope, ap);
      key = "{" + (auri ? *auri : "?" + std::string(ap)) + "}";
    }
    key += al;
    attrs[key] = a.value;
  }
  for (const auto& [k, v] : attrs) {
    out += " " + k + "=\"" + escape_attribute(v) + "\"";
  }
  out += ">";
  std::string pending;
  auto flush = [&] {
    std::string t = collapse_whitespace(pending);
    if (!t.empty()) out += escape_text(t);
    pending.clear();
  };
  for (const auto& child : e.children) {
    if (const auto* t = child.text()) {
      pending += t->value;
    } else if (const auto* c = child.element()) {
      flush();
      canonical_into(*c, scope, out);
    }
  }
  flush();
  out += "</>";
  scope.resize(scope.size() - pushed);
}

}  // namespace

const std::string* Element::attribute(std::string_view qname) const {
  for (const auto& a : attributes) {
    if (a.name == qname) return &a.value;
  }
  return nullptr;
}

const std::string* Element::attribute_local(std::string_view local_name) const {
  for (const auto& a : attributes) {
    if (is_declaration(a.name)) continue;
    if (split_qname(a.name).second == local_name) return &a.value;
  }
  return nullptr;
}

Element& Element::set_attribute(std::string qname, std::string value) {
  for (auto& a : attributes) {
    if (a.name == qname) {
      a.value = std::move(value);
      return *this;
    }
  }
  attributes.push_back({std::move(qname), std::move(value)});
  return *this;
}

Element& Element::add(Element child) {
  children.push_back(Node{std::move(child)});
  return *children.back().element();
}

Element& Element::add_text(std::string text) {
  children.push_back(Node{Text{std::move(text)}});
  return *this;
}

Element& Element::add_comment(std::string text) {
  children.push_back(Node{Comment{std::move(text)}});
  return *this;
}

std::vector<const Element*> Element::elements() const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (const auto* e = c.element()) out.push_back(e);
  }
  return out;
}

std::vector<Element*> Element::elements() {
  std::vector<Element*> out;
  for (auto& c : children) {
    if (auto* e = c.element()) out.push_back(e);
  }
  return out;
}

const Element* Element::first(std::string_view ns_uri,
                              std::string_view local_name) const {
  for (const auto& c : children) {
    if (const auto* e = c.element();
        e && e->ns == ns_uri && e->local == local_name)
      return e;
  }
  return nullptr;
}

std::string Element::text() const {
  std::string out;
  for (const auto& c : children) {
    if (const auto* t = c.text()) {
      out += t->value;
    } else if (const auto* e = c.element()) {
      out += e->text();
    }
  }
  return out;
}

bool Element::has_text_children() const {
  return std::any_of(children.begin(), children.end(),
                     [](const Node& n) { return n.text() != nullptr; });
}

Element parse(std::string_view bytes, ParseOptions options) {
  ParseState st;
  st.options = options;
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)>
      parser(XML_ParserCreate(nullptr), &XML_ParserFree);
  if (!parser) throw Error(Errc::kMalformedXml, "cannot allocate parser");
  st.parser = parser.get();
  XML_SetUserData(st.parser, &st);
  XML_SetElementHandler(st.parser, on_start, on_end);
  XML_SetCharacterDataHandler(st.parser, on_chars);
  XML_SetCommentHandler(st.parser, on_comment);
  XML_SetStartDoctypeDeclHandler(st.parser, on_doctype);
  if (XML_Parse(st.parser, bytes.data(), static_cast<int>(bytes.size()),
                XML_TRUE) != XML_STATUS_OK) {
    std::string message = st.error.empty()
                              ? XML_ErrorString(XML_GetErrorCode(st.parser))
                              : st.error;
    message += " at line " +
               std::to_string(XML_GetCurrentLineNumber(st.parser));
    throw Error(Errc::kMalformedXml, message);
  }
  if (!st.have_root) throw Error(Errc::kMalformedXml, "no root element");
  return std::move(st.root);
}

void resolve_namespaces(Element& root) {
  Scope scope;
  resolve(root, scope);
}

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '\r': out += "&#13;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string escape_attribute(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void write_element(std::string& out, const Element& e, int depth,
                   bool indent) {
  out.push_back('<');
  out += e.name;
  for (const auto& a : e.attributes) {
    out.push_back(' ');
    out += a.name;
    out += "=\"";
    out += escape_attribute(a.value);
    out.push_back('"');
  }
  if (e.children.empty()) {
    out += "/>";
    return;
  }
  out.push_back('>');
  bool pretty = indent && !e.has_text_children();
  for (const auto& child : e.children) {
    if (const auto* t = child.text()) {
      out += escape_text(t->value);
    } else if (const auto* c = child.element()) {
      if (pretty) indent_to(out, depth + 1);
      write_element(out, *c, depth + 1, pretty);
    } else if (const auto* cm = std::get_if<Comment>(&child.value)) {
      if (pretty) indent_to(out, depth + 1);
      out += "<!--" + cm->value + "-->";
    }
  }
  if (pretty) indent_to(out, depth);
  out += "</";
  out += e.name;
  out.push_back('>');
}

std::string serialize(const Element& root, WriteOptions options) {
  std::string out;
  if (options.declaration) out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write_element(out, root, 0, options.indent);
  if (options.declaration) out.push_back('\n');
  return out;
}

std::string canonical(const Element& root) {
  Scope scope;
  std::string out;
  canonical_into(root, scope, out);
  return out;
}

}  // namespace adore::xml
