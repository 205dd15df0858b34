#include "adore/didl.hpp"

#include <set>

#include "adore/error.hpp"
#include "adore/util.hpp"

namespace adore::didl {
namespace {

bool is_didl(const xml::Element& e, std::string_view local) {
  return e.local == local && (e.ns == kDidlNs || e.ns.empty());
}

const xml::Element* first_body_element(const Descriptor& d) {
  for (const auto& n : d.body) {
    if (const auto* e = n.element()) return e;
  }
  return nullptr;
}

void collect_local(const xml::Element& e, std::string_view ns,
                   std::string_view local, std::vector<std::string>& out) {
  if (e.ns == ns && e.local == local) {
    out.emplace_back(trim(e.text()));
    return;
  }
  for (const auto* c : e.elements()) collect_local(*c, ns, local, out);
}

xml::Element namespaced(std::string qname, std::string_view prefix,
                        std::string_view ns_uri) {
  xml::Element e(std::move(qname));
  e.set_attribute("xmlns:" + std::string(prefix), std::string(ns_uri));
  return e;
}

Descriptor wrap(xml::Element body) {
  xml::resolve_namespaces(body);
  Descriptor d;
  d.body.push_back(xml::Node{std::move(body)});
  return d;
}

class Reader {
 public:
  DidlDocument read(const xml::Element& root) {
    if (!is_didl(root, "DIDL"))
      throw Error(Errc::kMalformedXml, "root element is not DIDL");
    const std::string* did = root.attribute_local("DIDid");
    if (!did || trim(*did).empty())
      throw Error(Errc::kMissingPackageId, "DIDL root carries no DIDid");
    const std::string* created_text = root.attribute_local("DIDcreated");
    if (!created_text)
      throw Error(Errc::kMalformedXml, "DIDL root carries no DIDcreated");
    auto created = UtcTimestamp::parse_iso8601(trim(*created_text));
    if (!created)
      throw Error(Errc::kMalformedXml, "bad DIDcreated " + *created_text);

    std::vector<xml::Attribute> extras;
    for (const auto& a : root.attributes) {
      std::string_view name = a.name;
      size_t colon = name.find(':');
      std::string_view local = colon == std::string_view::npos
                                   ? name
                                   : name.substr(colon + 1);
      if (local == "DIDid" || local == "DIDcreated") continue;
      if (name == "xmlns:didl" && a.value == kDidlNs) continue;
      if (name == "xmlns:diext" && a.value == kDiextNs) continue;
      extras.push_back(a);
    }

    const xml::Element* container = nullptr;
    for (const auto* c : root.elements()) {
      if (is_didl(*c, "Container") && !container) {
        container = c;
      } else {
        throw Error(Errc::kMalformedXml,
                    "unsupported DIDL root child <" + c->name + ">");
      }
    }
    if (!container)
      throw Error(Errc::kMalformedXml, "DIDL document has no Container");
    return DidlDocument(PackageIdentifier::parse(trim(*did)), *created,
                        read_container(*container), std::move(extras));
  }

 private:
  std::set<std::string> ids_;

  std::string take_id(const xml::Element& e,
                      std::vector<xml::Attribute>& extras) {
    std::string id;
    for (const auto& a : e.attributes) {
      if (a.name == "id") {
        id = a.value;
      } else {
        extras.push_back(a);
      }
    }
    if (!id.empty() && !ids_.insert(id).second)
      throw Error(Errc::kDuplicateXmlId, "xml id '" + id + "' repeated");
    return id;
  }

  Descriptor read_descriptor(const xml::Element& e) {
    Descriptor d;
    d.attributes = e.attributes;
    for (const auto& a : e.attributes) {
      if (a.name == "id" && !ids_.insert(a.value).second)
        throw Error(Errc::kDuplicateXmlId, "xml id '" + a.value + "' repeated");
    }
    const xml::Element* statement = nullptr;
    for (const auto* c : e.elements()) {
      if (!is_didl(*c, "Statement") || statement)
        throw Error(Errc::kMalformedXml,
                    "a Descriptor must carry exactly one Statement");
      statement = c;
    }
    if (!statement)
      throw Error(Errc::kMalformedXml, "Descriptor without Statement");
    d.statement_mime.clear();
    for (const auto& a : statement->attributes) {
      if (a.name == "mimeType") {
        d.statement_mime = a.value;
      } else {
        d.statement_attributes.push_back(a);
      }
    }
    d.body = statement->children;
    return d;
  }

  Resource read_resource(const xml::Element& e) {
    Resource r;
    const std::string* ref = nullptr;
    for (const auto& a : e.attributes) {
      if (a.name == "mimeType") {
        r.mime_type = a.value;
      } else if (a.name == "encoding") {
        if (a.value == "base64") {
          r.encoding = Encoding::kBase64;
        } else {
          throw Error(Errc::kMalformedXml, "unsupported encoding " + a.value);
        }
      } else if (a.name == "ref") {
        ref = &a.value;
      } else {
        r.attributes.push_back(a);
      }
    }
    if (ref) {
      r.payload = ByReference{*ref};
    } else if (!e.elements().empty()) {
      r.payload = InlineXml{e.children};
    } else {
      r.payload = InlineText{e.text()};
    }
    return r;
  }

  Component read_component(const xml::Element& e) {
    Component c;
    c.xml_id = take_id(e, c.attributes);
    for (const auto* child : e.elements()) {
      if (is_didl(*child, "Descriptor")) {
        c.descriptors.push_back(read_descriptor(*child));
      } else if (is_didl(*child, "Resource")) {
        c.resources.push_back(read_resource(*child));
      } else {
        throw Error(Errc::kMalformedXml,
                    "unsupported Component child <" + child->name + ">");
      }
    }
    return c;
  }

  Item read_item(const xml::Element& e) {
    Item item;
    item.xml_id = take_id(e, item.attributes);
    for (const auto* child : e.elements()) {
      if (is_didl(*child, "Descriptor")) {
        item.descriptors.push_back(read_descriptor(*child));
      } else if (is_didl(*child, "Item")) {
        item.children.push_back(ItemChild{read_item(*child)});
      } else if (is_didl(*child, "Component")) {
        item.children.push_back(ItemChild{read_component(*child)});
      } else {
        throw Error(Errc::kMalformedXml,
                    "unsupported Item child <" + child->name + ">");
      }
    }
    return item;
  }

  Container read_container(const xml::Element& e) {
    Container c;
    c.xml_id = take_id(e, c.attributes);
    for (const auto* child : e.elements()) {
      if (is_didl(*child, "Descriptor")) {
        c.descriptors.push_back(read_descriptor(*child));
      } else if (is_didl(*child, "Item")) {
        c.items.push_back(read_item(*child));
      } else {
        throw Error(Errc::kMalformedXml,
                    "unsupported Container child <" + child->name + ">");
      }
    }
    return c;
  }
};

void put_id(xml::Element& e, const std::string& id,
            const std::vector<xml::Attribute>& extras) {
  if (!id.empty()) e.set_attribute("id", id);
  for (const auto& a : extras) e.attributes.push_back(a);
}

xml::Element write_descriptor(const Descriptor& d) {
  xml::Element e("didl:Descriptor");
  e.attributes = d.attributes;
  xml::Element& st = e.add(xml::Element("didl:Statement"));
  if (!d.statement_mime.empty()) st.set_attribute("mimeType", d.statement_mime);
  for (const auto& a : d.statement_attributes) st.attributes.push_back(a);
  st.children = d.body;
  return e;
}

xml::Element write_resource(const Resource& r) {
  xml::Element e("didl:Resource");
  if (!r.mime_type.empty()) e.set_attribute("mimeType", r.mime_type);
  if (r.encoding == Encoding::kBase64) e.set_attribute("encoding", "base64");
  if (const auto* ref = std::get_if<ByReference>(&r.payload))
    e.set_attribute("ref", ref->ref);
  for (const auto& a : r.attributes) e.attributes.push_back(a);
  if (const auto* x = std::get_if<InlineXml>(&r.payload)) {
    e.children = x->nodes;
  } else if (const auto* t = std::get_if<InlineText>(&r.payload)) {
    if (!t->text.empty()) e.add_text(t->text);
  }
  return e;
}

xml::Element write_component(const Component& c) {
  xml::Element e("didl:Component");
  put_id(e, c.xml_id, c.attributes);
  for (const auto& d : c.descriptors) e.add(write_descriptor(d));
  for (const auto& r : c.resources) e.add(write_resource(r));
  return e;
}

xml::Element write_item(const Item& item) {
  xml::Element e("didl:Item");
  put_id(e, item.xml_id, item.attributes);
  for (const auto& d : item.descriptors) e.add(write_descriptor(d));
  for (const auto& child : item.children) {
    if (const auto* sub = child.item()) {
      e.add(write_item(*sub));
    } else {
      e.add(write_component(*child.component()));
    }
  }
  return e;
}

void walk_item(const Item& item, std::vector<EntityRef>& out) {
  out.emplace_back(&item);
  for (const auto& child : item.children) {
    if (const auto* sub = child.item()) {
      walk_item(*sub, out);
    } else {
      out.emplace_back(child.component());
    }
  }
}

}  // namespace

PackageIdentifier PackageIdentifier::parse(std::string_view uri) {
  size_t hash = uri.find('#');
  if (hash == std::string_view::npos) return {std::string(uri), std::nullopt};
  return {std::string(uri.substr(0, hash)),
          std::string(trim(uri.substr(hash + 1)))};
}

std::string PackageIdentifier::str() const {
  return fragment ? base + "#" + *fragment : base;
}

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kContainer: return "container";
    case Level::kItem: return "item";
    case Level::kComponent: return "component";
  }
  return "?";
}

std::optional<std::string> Descriptor::identifier() const {
  const xml::Element* e = first_body_element(*this);
  if (e && e->ns == kDiiNs && e->local == "Identifier")
    return std::string(trim(e->text()));
  return std::nullopt;
}

std::optional<std::string> Descriptor::placeholder() const {
  const xml::Element* e = first_body_element(*this);
  if (!e || e->ns != kDiadmNs || e->local != "Admin") return std::nullopt;
  if (const xml::Element* f = e->first(kDcNs, "format"))
    return std::string(trim(f->text()));
  return std::nullopt;
}

std::vector<std::string> Descriptor::object_types() const {
  std::vector<std::string> out;
  for (const auto& n : body) {
    if (const auto* e = n.element()) collect_local(*e, kDipNs, "ObjectType", out);
  }
  return out;
}

std::vector<std::string> Descriptor::arguments() const {
  std::vector<std::string> out;
  for (const auto& n : body) {
    const auto* e = n.element();
    if (e && e->ns == kDipNs && e->local == "MethodInfo")
      collect_local(*e, kDipNs, "Argument", out);
  }
  return out;
}

Descriptor Descriptor::make_identifier(std::string_view uri) {
  xml::Element id = namespaced("dii:Identifier", "dii", kDiiNs);
  id.add_text(std::string(uri));
  return wrap(std::move(id));
}

Descriptor Descriptor::make_placeholder(std::string_view uri) {
  xml::Element admin = namespaced("diadm:Admin", "diadm", kDiadmNs);
  xml::Element format = namespaced("dc:format", "dc", kDcNs);
  format.add_text(std::string(uri));
  admin.add(std::move(format));
  return wrap(std::move(admin));
}

Descriptor Descriptor::make_object_type(std::string_view value) {
  xml::Element ot = namespaced("dip:ObjectType", "dip", kDipNs);
  ot.add_text(std::string(value));
  return wrap(std::move(ot));
}

Descriptor Descriptor::make_method_info(
    const std::vector<std::string>& arguments) {
  xml::Element info = namespaced("dip:MethodInfo", "dip", kDipNs);
  for (const auto& a : arguments) {
    xml::Element arg("dip:Argument");
    arg.add_text(a);
    info.add(std::move(arg));
  }
  return wrap(std::move(info));
}

std::vector<const Item*> Item::sub_items() const {
  std::vector<const Item*> out;
  for (const auto& c : children) {
    if (const auto* i = c.item()) out.push_back(i);
  }
  return out;
}

std::vector<const Component*> Item::components() const {
  std::vector<const Component*> out;
  for (const auto& c : children) {
    if (const auto* comp = c.component()) out.push_back(comp);
  }
  return out;
}

DidlDocument::DidlDocument(PackageIdentifier package_id, UtcTimestamp created,
                           Container root,
                           std::vector<xml::Attribute> root_attributes)
    : package_id_(std::move(package_id)),
      created_(created),
      container_(std::move(root)),
      root_attributes_(std::move(root_attributes)) {}

const std::string& entity_xml_id(EntityRef entity) {
  return std::visit([](auto* e) -> const std::string& { return e->xml_id; },
                    entity);
}

const std::vector<Descriptor>& entity_descriptors(EntityRef entity) {
  return std::visit(
      [](auto* e) -> const std::vector<Descriptor>& { return e->descriptors; },
      entity);
}

Level entity_level(EntityRef entity) {
  if (std::holds_alternative<const Container*>(entity)) return Level::kContainer;
  if (std::holds_alternative<const Item*>(entity)) return Level::kItem;
  return Level::kComponent;
}

DidlDocument from_element(const xml::Element& root) {
  return Reader().read(root);
}

DidlDocument parse_didl(std::string_view bytes) {
  return from_element(xml::parse(bytes));
}

xml::Element to_element(const DidlDocument& doc) {
  xml::Element root("didl:DIDL");
  root.set_attribute("diext:DIDid", doc.package_id().str());
  root.set_attribute("diext:DIDcreated", doc.created().iso8601());
  root.set_attribute("xmlns:didl", std::string(kDidlNs));
  root.set_attribute("xmlns:diext", std::string(kDiextNs));
  for (const auto& a : doc.root_attributes()) root.attributes.push_back(a);
  const Container& c = doc.container();
  xml::Element& ce = root.add(xml::Element("didl:Container"));
  put_id(ce, c.xml_id, c.attributes);
  for (const auto& d : c.descriptors) ce.add(write_descriptor(d));
  for (const auto& item : c.items) ce.add(write_item(item));
  return root;
}

std::string serialize_didl(const DidlDocument& doc, bool declaration) {
  return xml::serialize(to_element(doc), {.declaration = declaration});
}

bool structurally_equal(const DidlDocument& a, const DidlDocument& b) {
  return xml::canonical(to_element(a)) == xml::canonical(to_element(b));
}

PackageIdentifier mint_package_id(std::string_view namespace_prefix) {
  std::string base(namespace_prefix);
  if (!base.empty() && base.back() != '/') base.push_back('/');
  return {base + random_uuid(), std::nullopt};
}

std::string mint_xml_id() { return "uuid-" + random_uuid(); }

std::vector<EntityRef> entities(const DidlDocument& doc) {
  std::vector<EntityRef> out;
  out.emplace_back(&doc.container());
  for (const auto& item : doc.container().items) walk_item(item, out);
  return out;
}

std::optional<EntityRef> find_entity(const DidlDocument& doc,
                                     std::string_view xml_id) {
  if (xml_id.empty()) return std::nullopt;
  for (EntityRef e : entities(doc)) {
    if (entity_xml_id(e) == xml_id) return e;
  }
  return std::nullopt;
}

PackageIdentifier address_of(const DidlDocument& doc, std::string_view xml_id) {
  if (!find_entity(doc, xml_id))
    throw Error(Errc::kUnknownXmlId,
                "no element '" + std::string(xml_id) + "' in " +
                    doc.package_id().str());
  return doc.package_id().with_fragment(std::string(xml_id));
}

std::vector<IdentifierRef> extract_identifiers(const DidlDocument& doc) {
  std::vector<IdentifierRef> out;
  for (EntityRef e : entities(doc)) {
    const auto* item = std::get_if<const Item*>(&e);
    if (!item) continue;
    for (const auto& d : (*item)->descriptors) {
      if (auto id = d.identifier(); id && !id->empty())
        out.push_back({ContentIdentifier{*id}, (*item)->xml_id});
    }
  }
  return out;
}

std::vector<PlaceholderRef> placeholders(const DidlDocument& doc) {
  std::vector<PlaceholderRef> out;
  for (EntityRef e : entities(doc)) {
    for (const auto& d : entity_descriptors(e)) {
      if (auto p = d.placeholder())
        out.push_back({entity_level(e), *p, entity_xml_id(e)});
    }
  }
  return out;
}

}  // namespace adore::didl
