#include "adore/dip.hpp"

#include <algorithm>
#include <set>

#include "adore/error.hpp"
#include "adore/util.hpp"
#include "adore/xml.hpp"

namespace adore::dip {
namespace {

using didl::Component;
using didl::Container;
using didl::Descriptor;
using didl::EntityRef;
using didl::Item;

// Mutable descriptor list of the entity with `xml_id`.
std::vector<Descriptor>* descriptors_of(Item& item, const std::string& xml_id) {
  if (item.xml_id == xml_id) return &item.descriptors;
  for (auto& child : item.children) {
    if (auto* sub = child.item()) {
      if (auto* d = descriptors_of(*sub, xml_id)) return d;
    } else if (auto* c = child.component(); c->xml_id == xml_id) {
      return &c->descriptors;
    }
  }
  return nullptr;
}

std::vector<Descriptor>* descriptors_of(Container& c, const std::string& xml_id) {
  if (c.xml_id == xml_id) return &c.descriptors;
  for (auto& item : c.items) {
    if (auto* d = descriptors_of(item, xml_id)) return d;
  }
  return nullptr;
}

Item method_item(const std::string& service_id, const std::string& correspondence,
                 const std::string& transform_ref, std::string item_id, std::string component_id) {
  Component comp;
  comp.xml_id = std::move(component_id);
  comp.descriptors.push_back(Descriptor::make_method_info({correspondence}));
  didl::Resource method;
  method.mime_type = std::string(didl::kMethodMime);
  method.payload = didl::ByReference{transform_ref};
  comp.resources.push_back(std::move(method));
  Item item;
  item.xml_id = std::move(item_id);
  item.descriptors.push_back(Descriptor::make_identifier(service_id));
  item.children.push_back({std::move(comp)});
  return item;
}

std::set<std::string> object_types(EntityRef e) {
  std::set<std::string> out;
  for (const auto& d : didl::entity_descriptors(e)) {
    for (auto& v : d.object_types()) out.insert(std::move(v));
  }
  return out;
}

std::set<std::string> arguments(const Item& method) {
  std::set<std::string> out;
  for (const Component* c : method.components()) {
    for (const auto& d : c->descriptors) {
      for (auto& a : d.arguments()) out.insert(std::move(a));
    }
  }
  return out;
}

bool pairs(EntityRef e, const std::set<std::string>& args) {
  for (const auto& t : object_types(e)) {
    if (args.count(t)) return true;
  }
  return false;
}

std::optional<std::string> item_identifier(const Item& item) {
  for (const auto& d : item.descriptors) {
    if (auto id = d.identifier()) return id;
  }
  return std::nullopt;
}

std::string method_ref(const Item& method) {
  for (const Component* c : method.components()) {
    for (const auto& r : c->resources) {
      if (r.mime_type == didl::kMethodMime && r.by_reference())
        return std::get<didl::ByReference>(r.payload).ref;
    }
  }
  return {};
}

const xml::Element* find_by_id(const xml::Element& e, std::string_view xml_id) {
  if (const std::string* id = e.attribute("id"); id && *id == xml_id) return &e;
  for (const xml::Element* c : e.elements()) {
    if (const xml::Element* hit = find_by_id(*c, xml_id)) return hit;
  }
  return nullptr;
}

}  // namespace

DipTable DipTable::parse(std::string_view text) {
  DipTable t;
  std::size_t n = 0;
  for (std::string line : split(text, '\n')) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    if (f.size() < 3 || f.size() > 4 || f[0].empty() || f[1].empty() || f[2].empty())
      throw Error(Errc::kBadManifest, "DIP table line " + std::to_string(n) +
                                          ": expected service, placeholder, pointer, description");
    try {
      t.add(DipTableEntry{f[0], f[1], f[2], f.size() == 4 ? f[3] : std::string()});
    } catch (const Error& e) {
      throw Error(Errc::kBadManifest, "DIP table line " + std::to_string(n) + ": " + e.what());
    }
  }
  return t;
}

DipTable DipTable::load(const std::string& path) { return parse(read_file(path)); }

void DipTable::add(DipTableEntry entry) {
  for (const auto& e : entries_) {
    if (e.service_id == entry.service_id && e.placeholder_value == entry.placeholder_value)
      throw Error(Errc::kInvalidArgument, "duplicate DIP table row for " + entry.service_id +
                                              " on " + entry.placeholder_value);
  }
  entries_.push_back(std::move(entry));
}

bool DipTable::remove(const std::string& service_id, const std::string& placeholder_value) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const DipTableEntry& e) {
    return e.service_id == service_id && e.placeholder_value == placeholder_value;
  });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

std::vector<DipTableEntry> DipTable::lookup(std::string_view placeholder_value) const {
  std::vector<DipTableEntry> out;
  for (const auto& e : entries_) {
    if (e.placeholder_value == placeholder_value) out.push_back(e);
  }
  return out;
}

std::vector<DipTableEntry> DipTable::by_service(std::string_view service_id) const {
  std::vector<DipTableEntry> out;
  for (const auto& e : entries_) {
    if (e.service_id == service_id) out.push_back(e);
  }
  return out;
}

bool DipTable::has_service(std::string_view service_id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const DipTableEntry& e) { return e.service_id == service_id; });
}

std::string DipTable::serialize() const {
  std::string out = "# service_id\tplaceholder_value\ttransform_pointer\tdescription\n";
  for (const auto& e : entries_)
    out += e.service_id + "\t" + e.placeholder_value + "\t" + e.transform_ref + "\t" +
           e.description + "\n";
  return out;
}

void DipTable::save(const std::string& path) const { write_file(path, serialize()); }

Completion complete(const didl::DidlDocument& doc, const DipTable& table) {
  Container root = doc.container();
  std::vector<Insertion> insertions;
  // Minted values are name-based on the binding, so completing the same
  // document twice yields the same bytes.
  for (const auto& ph : didl::placeholders(doc)) {
    for (const auto& entry : table.lookup(ph.value)) {
      std::string name = doc.package_id().base + "#" + ph.host_xml_id + " " +
                         entry.service_id + " " + std::to_string(insertions.size());
      Insertion ins{entry.service_id, ph.host_xml_id, "urn:uuid:" + name_uuid(name),
                    "uuid-" + name_uuid(name + " item")};
      std::vector<Descriptor>* host = descriptors_of(root, ph.host_xml_id);
      if (!host) throw Error(Errc::kUnknownXmlId, "placeholder host " + ph.host_xml_id);
      host->push_back(Descriptor::make_object_type(ins.correspondence));
      root.items.push_back(method_item(entry.service_id, ins.correspondence,
                                       entry.transform_ref, ins.method_item_id,
                                       "uuid-" + name_uuid(name + " component")));
      insertions.push_back(std::move(ins));
    }
  }
  return {didl::DidlDocument(doc.package_id(), doc.created(), std::move(root),
                             doc.root_attributes()),
          std::move(insertions)};
}

didl::DidlDocument strip_dims(const didl::DidlDocument& completed,
                              const std::vector<Insertion>& insertions) {
  Container root = completed.container();
  for (const auto& ins : insertions) {
    if (auto* host = descriptors_of(root, ins.host_xml_id)) {
      auto it = std::find_if(host->begin(), host->end(), [&](const Descriptor& d) {
        auto types = d.object_types();
        return types.size() == 1 && types[0] == ins.correspondence;
      });
      if (it != host->end()) host->erase(it);
    }
    std::erase_if(root.items, [&](const Item& i) { return i.xml_id == ins.method_item_id; });
  }
  return didl::DidlDocument(completed.package_id(), completed.created(), std::move(root),
                            completed.root_attributes());
}

std::vector<const Item*> method_items(const didl::DidlDocument& doc, std::string_view service_id) {
  std::vector<const Item*> out;
  for (const Item& item : doc.container().items) {
    if (method_ref(item).empty()) continue;
    if (item_identifier(item) == service_id) out.push_back(&item);
  }
  return out;
}

std::vector<std::string> services_in(const didl::DidlDocument& doc) {
  std::vector<std::string> out;
  for (const Item& item : doc.container().items) {
    if (method_ref(item).empty()) continue;
    if (auto id = item_identifier(item);
        id && std::find(out.begin(), out.end(), *id) == out.end())
      out.push_back(*id);
  }
  return out;
}

std::optional<EntityRef> bound_entity(const didl::DidlDocument& doc, EntityRef target,
                                      std::string_view service_id) {
  std::set<std::string> args;
  for (const Item* m : method_items(doc, service_id)) args.merge(arguments(*m));
  if (args.empty()) return std::nullopt;
  if (pairs(target, args)) return target;
  if (const Item* const* item = std::get_if<const Item*>(&target)) {
    for (const Component* c : (*item)->components()) {
      if (pairs(c, args)) return EntityRef(c);
    }
  }
  return std::nullopt;
}

std::string entity_xml(const didl::DidlDocument& doc, EntityRef entity) {
  if (std::holds_alternative<const Container*>(entity)) return serialize_didl(doc);
  xml::Element root = didl::to_element(doc);
  const xml::Element* found = find_by_id(root, didl::entity_xml_id(entity));
  if (!found) throw Error(Errc::kUnknownTarget, "no element " + didl::entity_xml_id(entity));
  xml::Element copy = *found;
  for (const auto& a : root.attributes) {
    if (a.name.starts_with("xmlns") && !copy.attribute(a.name)) copy.attributes.push_back(a);
  }
  return xml::serialize(copy);
}

Output raw_output(const didl::DidlDocument& doc, EntityRef entity, const Dereferencer& deref) {
  const Component* const* comp = std::get_if<const Component*>(&entity);
  if (!comp) return {entity_xml(doc, entity), std::string(didl::kStatementMime)};
  if ((*comp)->resources.empty())
    throw Error(Errc::kUnknownTarget, "component " + (*comp)->xml_id + " has no resource");
  const didl::Resource& r = (*comp)->resources.front();
  Output out{{}, r.mime_type};
  if (const auto* ref = std::get_if<didl::ByReference>(&r.payload)) {
    if (!deref) throw Error(Errc::kTransformFailure, "no datastream store for " + ref->ref);
    Output fetched = deref(ref->ref);
    out.bytes = std::move(fetched.bytes);
    if (out.mime_type.empty()) out.mime_type = fetched.mime_type;
  } else if (const auto* text = std::get_if<didl::InlineText>(&r.payload)) {
    if (r.encoding == didl::Encoding::kBase64) {
      auto bytes = base64_decode(text->text);
      if (!bytes) throw Error(Errc::kTransformFailure, "bad base64 in " + (*comp)->xml_id);
      out.bytes = std::move(*bytes);
    } else {
      out.bytes = text->text;
    }
  } else {
    const auto& nodes = std::get<didl::InlineXml>(r.payload).nodes;
    const xml::Element* first = nullptr;
    for (const auto& n : nodes) {
      if ((first = n.element())) break;
    }
    if (!first) throw Error(Errc::kTransformFailure, "empty inline XML in " + (*comp)->xml_id);
    out.bytes = xml::serialize(*first);
  }
  return out;
}

Output Engine::apply(const didl::DidlDocument& completed, const didl::PackageIdentifier& target,
                     const std::optional<std::string>& service_id) const {
  if (target.base != completed.package_id().base)
    throw Error(Errc::kUnknownTarget, target.str() + " is not part of " +
                                          completed.package_id().base);
  EntityRef entity = &completed.container();
  if (target.fragment) {
    auto found = didl::find_entity(completed, *target.fragment);
    if (!found) throw Error(Errc::kUnknownTarget, "no element " + *target.fragment);
    entity = *found;
  }
  if (!service_id) return raw_output(completed, entity, dereference_);
  if (!table_.has_service(*service_id))
    throw Error(Errc::kUnknownService, "unknown service " + *service_id);
  auto bound = bound_entity(completed, entity, *service_id);
  if (!bound)
    throw Error(Errc::kServiceNotApplicable,
                *service_id + " does not apply to " + target.str());
  std::string ref;
  for (const Item* m : method_items(completed, *service_id)) {
    if (pairs(*bound, arguments(*m))) {
      ref = method_ref(*m);
      break;
    }
  }
  const Transform* transform = registry_.find(ref);
  if (!transform) throw Error(Errc::kTransformFailure, "no transform registered for " + ref);
  try {
    return (*transform)({completed, *bound, dereference_});
  } catch (const Error& e) {
    if (e.code() == Errc::kUpstreamUnavailable || e.code() == Errc::kTransformFailure) throw;
    throw Error(Errc::kTransformFailure, ref + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::kTransformFailure, ref + ": " + e.what());
  }
}

DipTable sample_table(std::string_view ns) {
  std::string n(ns);
  DipTable t;
  const std::string toc = "XHTML table of contents: datastreams of the object and the services bound to each";
  t.add({n + "service/table_of_contents", n + "pro/ai", "http://purl.lanl.gov/dip/methods/toc.js", toc});
  t.add({n + "service/table_of_contents", n + "pro/paper", "http://purl.lanl.gov/dip/methods/toc.js", toc});
  t.add({n + "service/marc_2_mods", n + "fmt/3", "http://purl.lanl.gov/dip/methods/marctomods.js",
         "MARCXML datastream rendered as a MODS record"});
  return t;
}

DipTable deployment_table(std::string_view ns) {
  std::string n(ns);
  DipTable t = sample_table(ns);
  // Whole-document services bind to the container placeholder.
  const std::string container = n + "pro/DIDL";
  t.add({n + "service/didl_completed", container, "didl_completed",
         "Completed DIDL document with every method binding inserted"});
  t.add({n + "service/identifiers", container, "identifiers_only",
         "Package and content identifiers for loading the locator"});
  t.add({n + "service/oai_dc", container, "record_to_dc", "Minimal Dublin Core record"});
  t.add({n + "service/mets", container, "format_crosswalk", "METS rendering of the package"});
  return t;
}

}  // namespace adore::dip
