#include <algorithm>
#include <set>

#include "adore/dip.hpp"
#include "adore/error.hpp"
#include "adore/locator.hpp"
#include "adore/util.hpp"
#include "adore/xml.hpp"

namespace adore::dip {
namespace {

using didl::Component;
using didl::EntityRef;
using didl::Item;

constexpr std::string_view kXml = "text/xml; charset=UTF-8";

Error not_applicable(const std::string& what) { return Error(Errc::kTransformFailure, what); }

bool is_method(const Item& item) {
  for (const Component* c : item.components()) {
    for (const auto& r : c->resources) {
      if (r.mime_type == didl::kMethodMime) return true;
    }
  }
  return false;
}

// The document minus container-level method Items, whose identifiers name
// services rather than content.
didl::DidlDocument content_only(const didl::DidlDocument& doc) {
  didl::Container c = doc.container();
  std::erase_if(c.items, [](const Item& item) { return is_method(item); });
  return didl::DidlDocument(doc.package_id(), doc.created(), std::move(c), doc.root_attributes());
}

std::optional<std::string> identifier_of(const std::vector<didl::Descriptor>& ds) {
  for (const auto& d : ds) {
    if (auto id = d.identifier()) return id;
  }
  return std::nullopt;
}

std::optional<std::string> placeholder_of(const std::vector<didl::Descriptor>& ds) {
  for (const auto& d : ds) {
    if (auto p = d.placeholder()) return p;
  }
  return std::nullopt;
}

std::string address(const didl::DidlDocument& doc, const std::string& xml_id) {
  return doc.package_id().base + "#" + xml_id;
}

// Subfields of the first datafield `tag` joined by spaces.
std::string marc_field(const xml::Element& record, std::string_view tag,
                       std::string_view codes) {
  for (const xml::Element* f : record.elements()) {
    if (f->local != "datafield" || !f->attribute("tag") || *f->attribute("tag") != tag) continue;
    std::string out;
    for (const xml::Element* s : f->elements()) {
      const std::string* code = s->attribute("code");
      if (s->local != "subfield" || !code || codes.find(*code) == std::string_view::npos)
        continue;
      if (!out.empty()) out.push_back(' ');
      out += trim(s->text());
    }
    return out;
  }
  return {};
}

std::vector<std::string> marc_all(const xml::Element& record, std::string_view tag,
                                  std::string_view code) {
  std::vector<std::string> out;
  for (const xml::Element* f : record.elements()) {
    if (f->local != "datafield" || !f->attribute("tag") || *f->attribute("tag") != tag) continue;
    for (const xml::Element* s : f->elements()) {
      const std::string* c = s->attribute("code");
      if (s->local == "subfield" && c && *c == code) out.emplace_back(trim(s->text()));
    }
  }
  return out;
}

std::string marc_control(const xml::Element& record, std::string_view tag) {
  for (const xml::Element* f : record.elements()) {
    if (f->local == "controlfield" && f->attribute("tag") && *f->attribute("tag") == tag)
      return f->text();
  }
  return {};
}

// Trailing ISBD punctuation carried in MARC subfields.
std::string clean(std::string s) {
  while (!s.empty() && std::string_view(" /:;,.").find(s.back()) != std::string_view::npos)
    s.pop_back();
  return s;
}

std::optional<xml::Element> marc_record(const didl::DidlDocument& doc, EntityRef e,
                                        const Dereferencer& deref) {
  const Component* const* c = std::get_if<const Component*>(&e);
  if (!c || (*c)->resources.empty()) return std::nullopt;
  const auto& mime = (*c)->resources.front().mime_type;
  if (mime.find("xml") == std::string::npos) return std::nullopt;
  xml::Element root = xml::parse(raw_output(doc, e, deref).bytes);
  if (root.ns != kMarcNs) return std::nullopt;
  if (root.local == "collection") {
    const xml::Element* first = root.first(kMarcNs, "record");
    if (!first) return std::nullopt;
    return *first;
  }
  if (root.local != "record") return std::nullopt;
  return root;
}

xml::Element& text_child(xml::Element& parent, std::string name, std::string text) {
  xml::Element& e = parent.add(xml::Element(std::move(name)));
  e.add_text(std::move(text));
  return e;
}

Output marcxml_to_mods(const TransformInput& in) {
  auto rec = marc_record(in.document, in.target, in.dereference);
  if (!rec) throw not_applicable("target is not a MARCXML datastream");
  xml::Element mods("mods");
  mods.set_attribute("xmlns", std::string(kModsNs));
  mods.set_attribute("version", "3.0");
  if (auto title = clean(marc_field(*rec, "245", "ab")); !title.empty()) {
    xml::Element& ti = mods.add(xml::Element("titleInfo"));
    text_child(ti, "title", title);
  }
  auto add_name = [&](const std::string& n, const char* role) {
    xml::Element& name = mods.add(xml::Element("name"));
    name.set_attribute("type", "personal");
    text_child(name, "namePart", clean(n));
    xml::Element& r = name.add(xml::Element("role"));
    text_child(r, "roleTerm", role).set_attribute("type", "text");
  };
  for (const auto& n : marc_all(*rec, "100", "a")) add_name(n, "creator");
  for (const auto& n : marc_all(*rec, "700", "a")) add_name(n, "contributor");
  std::string leader;
  if (const xml::Element* l = rec->first(kMarcNs, "leader")) leader = l->text();
  if (leader.size() > 6 && (leader[6] == 'a' || leader[6] == 't'))
    text_child(mods, "typeOfResource", "text");
  auto place = marc_all(*rec, "260", "a");
  auto publisher = marc_all(*rec, "260", "b");
  auto date = marc_all(*rec, "260", "c");
  if (!place.empty() || !publisher.empty() || !date.empty()) {
    xml::Element& oi = mods.add(xml::Element("originInfo"));
    for (const auto& p : place) {
      xml::Element& pl = oi.add(xml::Element("place"));
      text_child(pl, "placeTerm", clean(p)).set_attribute("type", "text");
    }
    for (const auto& p : publisher) text_child(oi, "publisher", clean(p));
    for (const auto& d : date) text_child(oi, "dateIssued", clean(d));
  }
  std::string fixed = marc_control(*rec, "008");
  if (fixed.size() >= 38 && fixed.substr(35, 3).find(' ') == std::string::npos) {
    xml::Element& lang = mods.add(xml::Element("language"));
    xml::Element& term = text_child(lang, "languageTerm", fixed.substr(35, 3));
    term.set_attribute("type", "code");
    term.set_attribute("authority", "iso639-2b");
  }
  for (const auto& a : marc_all(*rec, "520", "a")) text_child(mods, "abstract", a);
  for (const auto& s : marc_all(*rec, "650", "a")) {
    xml::Element& subject = mods.add(xml::Element("subject"));
    text_child(subject, "topic", clean(s));
  }
  for (const auto& v : marc_all(*rec, "020", "a"))
    text_child(mods, "identifier", v).set_attribute("type", "isbn");
  for (const auto& v : marc_all(*rec, "022", "a"))
    text_child(mods, "identifier", v).set_attribute("type", "issn");
  for (const auto& v : marc_all(*rec, "035", "a"))
    text_child(mods, "identifier", v).set_attribute("type", "local");
  std::string control = marc_control(*rec, "001");
  std::string source = marc_control(*rec, "003");
  if (!control.empty() || !source.empty()) {
    xml::Element& ri = mods.add(xml::Element("recordInfo"));
    if (!source.empty()) text_child(ri, "recordContentSource", source);
    if (!control.empty()) text_child(ri, "recordIdentifier", control);
  }
  return {xml::serialize(mods), "application/mods+xml"};
}

// Datastream Components under `item` with their nearest enclosing Item.
void collect(const Item& item, std::vector<std::pair<const Component*, const Item*>>& out) {
  for (const auto& child : item.children) {
    if (const Item* sub = child.item()) {
      collect(*sub, out);
    } else {
      out.emplace_back(child.component(), &item);
    }
  }
}

Output table_of_contents(const TransformInput& in) {
  const Item* const* target = std::get_if<const Item*>(&in.target);
  if (!target) throw not_applicable("a table of contents needs an Item");
  const auto& doc = in.document;
  std::string label = identifier_of((*target)->descriptors)
                          .value_or(address(doc, (*target)->xml_id));
  std::vector<std::pair<const Component*, const Item*>> streams;
  collect(**target, streams);
  auto services = services_in(doc);

  xml::Element html("html");
  html.set_attribute("xmlns", std::string(kXhtmlNs));
  xml::Element& head = html.add(xml::Element("head"));
  text_child(head, "title", "Contents of " + label);
  xml::Element& body = html.add(xml::Element("body"));
  text_child(body, "h1", label);
  text_child(body, "p", "Package " + doc.package_id().base + ", created " +
                            doc.created().iso8601() + ", " + std::to_string(streams.size()) +
                            " datastream" + (streams.size() == 1 ? "" : "s"));
  xml::Element& list = body.add(xml::Element("ul"));
  list.set_attribute("class", "datastreams");
  for (const auto& [comp, parent] : streams) {
    xml::Element& li = list.add(xml::Element("li"));
    li.set_attribute("class", "datastream");
    text_child(li, "span", address(doc, comp->xml_id)).set_attribute("class", "address");
    std::string mime = comp->resources.empty() ? "" : comp->resources.front().mime_type;
    text_child(li, "span", mime).set_attribute("class", "mime");
    if (parent != *target) {
      if (auto id = identifier_of(parent->descriptors))
        text_child(li, "span", *id).set_attribute("class", "identifier");
    }
    std::vector<std::string> available;
    for (const auto& s : services) {
      auto bound = bound_entity(doc, comp, s);
      if (!bound && parent != *target) bound = bound_entity(doc, parent, s);
      if (bound && didl::entity_xml_id(*bound) == comp->xml_id) available.push_back(s);
    }
    if (!available.empty()) {
      xml::Element& ul = li.add(xml::Element("ul"));
      ul.set_attribute("class", "services");
      for (const auto& s : available) text_child(ul, "li", s);
    }
  }
  return {xml::serialize(html), "application/xhtml+xml"};
}

Output record_to_dc(const TransformInput& in) {
  const auto& doc = in.document;
  xml::Element dc("oai_dc:dc");
  dc.set_attribute("xmlns:oai_dc", std::string(kOaiDcNs));
  dc.set_attribute("xmlns:dc", std::string(didl::kDcNs));
  std::string title;
  std::set<std::string> formats;
  std::vector<std::string> formats_ordered;
  for (EntityRef e : didl::entities(doc)) {
    const Component* const* c = std::get_if<const Component*>(&e);
    if (!c || (*c)->resources.empty()) continue;
    const std::string& mime = (*c)->resources.front().mime_type;
    if (mime == didl::kMethodMime) continue;
    if (formats.insert(mime).second) formats_ordered.push_back(mime);
    if (title.empty()) {
      try {
        if (auto rec = marc_record(doc, e, in.dereference)) title = clean(marc_field(*rec, "245", "ab"));
      } catch (const Error&) {
        // a datastream that is not parseable MARCXML carries no title
      }
    }
  }
  if (!title.empty()) text_child(dc, "dc:title", title);
  text_child(dc, "dc:identifier", doc.package_id().base);
  for (const auto& ref : didl::extract_identifiers(content_only(doc)))
    text_child(dc, "dc:identifier", ref.content_id.uri);
  text_child(dc, "dc:date", doc.created().iso8601());
  for (const auto& f : formats_ordered) text_child(dc, "dc:format", f);
  return {xml::serialize(dc), std::string(kXml)};
}

void mets_div(const didl::DidlDocument& doc, const Item& item, xml::Element& parent,
              xml::Element& files) {
  xml::Element& div = parent.add(xml::Element("mets:div"));
  div.set_attribute("ID", item.xml_id);
  if (auto p = placeholder_of(item.descriptors)) div.set_attribute("TYPE", *p);
  if (auto id = identifier_of(item.descriptors)) div.set_attribute("LABEL", *id);
  for (const auto& child : item.children) {
    if (const Item* sub = child.item()) {
      mets_div(doc, *sub, div, files);
      continue;
    }
    const Component* c = child.component();
    if (c->resources.empty()) continue;
    const didl::Resource& r = c->resources.front();
    xml::Element& file = files.add(xml::Element("mets:file"));
    file.set_attribute("ID", c->xml_id);
    file.set_attribute("MIMETYPE", r.mime_type);
    if (const auto* ref = std::get_if<didl::ByReference>(&r.payload)) {
      xml::Element& loc = file.add(xml::Element("mets:FLocat"));
      loc.set_attribute("LOCTYPE", "URN");
      loc.set_attribute("xlink:href", ref->ref);
    } else {
      std::string bytes = raw_output(doc, c, {}).bytes;
      xml::Element& content = file.add(xml::Element("mets:FContent"));
      text_child(content, "mets:binData", base64_encode(bytes));
    }
    div.add(xml::Element("mets:fptr")).set_attribute("FILEID", c->xml_id);
  }
}

Output format_crosswalk(const TransformInput& in) {
  const auto& doc = in.document;
  xml::Element mets("mets:mets");
  mets.set_attribute("xmlns:mets", std::string(kMetsNs));
  mets.set_attribute("xmlns:xlink", "http://www.w3.org/1999/xlink");
  mets.set_attribute("OBJID", doc.package_id().base);
  mets.add(xml::Element("mets:metsHdr")).set_attribute("CREATEDATE", doc.created().iso8601());
  xml::Element file_sec("mets:fileSec");
  xml::Element& group = file_sec.add(xml::Element("mets:fileGrp"));
  xml::Element struct_map("mets:structMap");
  for (const Item& item : doc.container().items) {
    if (!is_method(item)) mets_div(doc, item, struct_map, group);
  }
  mets.add(std::move(file_sec));
  mets.add(std::move(struct_map));
  return {xml::serialize(mets), std::string(kXml)};
}

}  // namespace

TransformRegistry TransformRegistry::builtin() {
  TransformRegistry r;
  r.add({"raw_bytes", "element", "resource MIME type",
         "Datastream bytes as stored; XML of an Item; the document for the Container"},
        [](const TransformInput& in) { return raw_output(in.document, in.target, in.dereference); });
  r.add({"identifiers_only", "document", std::string(kXml),
         "Package id, creation time and (content id, xml id) pairs"},
        [](const TransformInput& in) {
          return Output{locator::identifiers_xml(content_only(in.document)), std::string(kXml)};
        });
  r.add({"didl_completed", "document", std::string(kXml), "Completed DIDL document"},
        [](const TransformInput& in) {
          return Output{didl::serialize_didl(in.document), std::string(kXml)};
        });
  r.add({"format_crosswalk", "document", std::string(kXml), "METS rendering of the package"},
        format_crosswalk);
  r.add({"record_to_dc", "document", std::string(kXml), "Minimal oai_dc record"}, record_to_dc);
  r.add({"marcxml_to_mods", "element", "application/mods+xml",
         "MODS record from a MARCXML datastream Component"},
        marcxml_to_mods);
  r.add({"table_of_contents", "element", "application/xhtml+xml",
         "XHTML listing of an Item's datastreams and their services"},
        table_of_contents);
  r.alias("http://purl.lanl.gov/dip/methods/toc.js", "table_of_contents");
  r.alias("http://purl.lanl.gov/dip/methods/marctomods.js", "marcxml_to_mods");
  return r;
}

void TransformRegistry::add(TransformInfo info, Transform transform) {
  std::string name = info.name;
  transforms_[name] = {std::move(info), std::move(transform)};
}

void TransformRegistry::alias(std::string ref, std::string name) {
  aliases_[std::move(ref)] = std::move(name);
}

bool TransformRegistry::remove(const std::string& name) { return transforms_.erase(name) != 0; }

std::optional<std::string> TransformRegistry::resolve_name(std::string_view ref) const {
  std::string_view name = ref;
  if (name.starts_with("transform:")) name.remove_prefix(10);
  if (auto a = aliases_.find(name); a != aliases_.end()) name = a->second;
  if (transforms_.find(name) == transforms_.end()) return std::nullopt;
  return std::string(name);
}

const Transform* TransformRegistry::find(std::string_view ref) const {
  auto name = resolve_name(ref);
  if (!name) return nullptr;
  return &transforms_.find(*name)->second.second;
}

std::vector<TransformInfo> TransformRegistry::list() const {
  std::vector<TransformInfo> out;
  for (const auto& [_, t] : transforms_) out.push_back(t.first);
  return out;
}

}  // namespace adore::dip
