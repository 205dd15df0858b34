#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adore/timestamp.hpp"
#include "adore/xml.hpp"

// MPEG-21 DID abstract model (Container / Item / Component / Resource /
// Descriptor), its DIDL XML codec, and the two identifier schemes carried in
// stored packages.
namespace adore::didl {

inline constexpr std::string_view kDidlNs = "urn:mpeg:mpeg21:2002:02-DIDL-NS";
inline constexpr std::string_view kDiiNs = "urn:mpeg:mpeg21:2002:01-DII-NS";
inline constexpr std::string_view kDipNs = "urn:mpeg:mpeg21:2002:01-DIP-NS";
inline constexpr std::string_view kDiextNs =
    "http://library.lanl.gov/2004-04/STB-RL/DIEXT";
inline constexpr std::string_view kDiadmNs =
    "http://library.lanl.gov/2004-01/STB-RL/DIADM";
inline constexpr std::string_view kDcNs = "http://purl.org/dc/elements/1.1/";
inline constexpr std::string_view kStatementMime = "text/xml; charset=UTF-8";
inline constexpr std::string_view kMethodMime = "application/mp21-method";

// System-minted URI of a stored package, optionally addressing one element
// inside it through a bare `#xmlId` fragment.
struct PackageIdentifier {
  std::string base;
  std::optional<std::string> fragment;

  static PackageIdentifier parse(std::string_view uri);
  std::string str() const;
  PackageIdentifier with_fragment(std::string xml_id) const {
    return {base, std::move(xml_id)};
  }
  bool operator==(const PackageIdentifier&) const = default;
};

// Externally minted identifier carried through from ingestion (DOI, PMID...).
struct ContentIdentifier {
  std::string uri;
  bool operator==(const ContentIdentifier&) const = default;
};

enum class Level { kContainer, kItem, kComponent };
std::string_view level_name(Level level);

struct Descriptor {
  std::vector<xml::Attribute> attributes;  // on <Descriptor>, id included
  std::string statement_mime{kStatementMime};
  std::vector<xml::Attribute> statement_attributes;  // other than mimeType
  std::vector<xml::Node> body;

  // DII Identifier value, trimmed.
  std::optional<std::string> identifier() const;
  // diadm:Admin/dc:format value, trimmed.
  std::optional<std::string> placeholder() const;
  std::vector<std::string> object_types() const;
  // dip:MethodInfo/dip:Argument values.
  std::vector<std::string> arguments() const;

  static Descriptor make_identifier(std::string_view uri);
  static Descriptor make_placeholder(std::string_view uri);
  static Descriptor make_object_type(std::string_view value);
  static Descriptor make_method_info(const std::vector<std::string>& arguments);
};

enum class Encoding { kNone, kBase64 };

struct InlineXml {
  std::vector<xml::Node> nodes;
};
struct InlineText {
  std::string text;  // character content as written; base64 when encoded
};
struct ByReference {
  std::string ref;
};

struct Resource {
  std::string mime_type;
  Encoding encoding = Encoding::kNone;
  std::variant<InlineXml, InlineText, ByReference> payload;
  std::vector<xml::Attribute> attributes;  // other than mimeType/encoding/ref

  bool by_reference() const {
    return std::holds_alternative<ByReference>(payload);
  }
};

struct Component {
  std::string xml_id;
  std::vector<xml::Attribute> attributes;
  std::vector<Descriptor> descriptors;
  std::vector<Resource> resources;  // bit-equivalent alternatives, in order
};

struct ItemChild;

struct Item {
  std::string xml_id;
  std::vector<xml::Attribute> attributes;
  std::vector<Descriptor> descriptors;
  std::vector<ItemChild> children;  // sub-Items and Components, in order

  std::vector<const Item*> sub_items() const;
  std::vector<const Component*> components() const;
};

struct ItemChild {
  std::variant<Item, Component> value;

  const Item* item() const { return std::get_if<Item>(&value); }
  Item* item() { return std::get_if<Item>(&value); }
  const Component* component() const { return std::get_if<Component>(&value); }
  Component* component() { return std::get_if<Component>(&value); }
};

struct Container {
  std::string xml_id;
  std::vector<xml::Attribute> attributes;
  std::vector<Descriptor> descriptors;
  std::vector<Item> items;
};

// The stored archival package. Identity and creation time are fixed at
// construction; every transformation builds a new document.
class DidlDocument {
 public:
  DidlDocument(PackageIdentifier package_id, UtcTimestamp created,
               Container root, std::vector<xml::Attribute> root_attributes = {});

  const PackageIdentifier& package_id() const { return package_id_; }
  UtcTimestamp created() const { return created_; }
  const Container& container() const { return container_; }
  const std::vector<xml::Attribute>& root_attributes() const {
    return root_attributes_;
  }

 private:
  PackageIdentifier package_id_;
  UtcTimestamp created_;
  Container container_;
  std::vector<xml::Attribute> root_attributes_;
};

// Non-owning handle on an addressable entity inside a document.
using EntityRef =
    std::variant<const Container*, const Item*, const Component*>;

const std::string& entity_xml_id(EntityRef entity);
const std::vector<Descriptor>& entity_descriptors(EntityRef entity);
Level entity_level(EntityRef entity);

// Throws Error: kMalformedXml, kMissingPackageId, kDuplicateXmlId.
DidlDocument parse_didl(std::string_view bytes);
DidlDocument from_element(const xml::Element& root);

xml::Element to_element(const DidlDocument& doc);
std::string serialize_didl(const DidlDocument& doc, bool declaration = true);

// Structural equality: attribute order and insignificant whitespace ignored.
bool structurally_equal(const DidlDocument& a, const DidlDocument& b);

PackageIdentifier mint_package_id(std::string_view namespace_prefix);
std::string mint_xml_id();

// Throws Error(kUnknownXmlId).
PackageIdentifier address_of(const DidlDocument& doc, std::string_view xml_id);
std::optional<EntityRef> find_entity(const DidlDocument& doc,
                                     std::string_view xml_id);
// Document order: container, then items depth-first, components in place.
std::vector<EntityRef> entities(const DidlDocument& doc);

struct IdentifierRef {
  ContentIdentifier content_id;
  std::string xml_id;
  bool operator==(const IdentifierRef&) const = default;
};

// DII Identifiers carried on Items, in document order.
std::vector<IdentifierRef> extract_identifiers(const DidlDocument& doc);

struct PlaceholderRef {
  Level level;
  std::string value;
  std::string host_xml_id;
};

std::vector<PlaceholderRef> placeholders(const DidlDocument& doc);

}  // namespace adore::didl
