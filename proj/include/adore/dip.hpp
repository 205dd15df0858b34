#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adore/didl.hpp"

// Dynamic dissemination: the DIP Table, the DIM inserter producing completed
// documents, and the engine applying registered transforms to addressed
// entities.
namespace adore::dip {

struct DipTableEntry {
  std::string service_id;
  std::string placeholder_value;
  std::string transform_ref;
  std::string description;
  bool operator==(const DipTableEntry&) const = default;
};

// File format: tab-separated `service_id placeholder transform_ref
// description`, '#' comment lines.
class DipTable {
 public:
  // Throws Error(kBadManifest) for malformed lines or duplicate
  // (service, placeholder) pairs.
  static DipTable parse(std::string_view text);
  static DipTable load(const std::string& path);

  // Throws Error(kInvalidArgument) on a duplicate (service, placeholder).
  void add(DipTableEntry entry);
  bool remove(const std::string& service_id, const std::string& placeholder_value);

  std::vector<DipTableEntry> lookup(std::string_view placeholder_value) const;
  std::vector<DipTableEntry> by_service(std::string_view service_id) const;
  bool has_service(std::string_view service_id) const;
  const std::vector<DipTableEntry>& entries() const { return entries_; }

  std::string serialize() const;
  void save(const std::string& path) const;

 private:
  std::vector<DipTableEntry> entries_;
};

struct Output {
  std::string bytes;
  std::string mime_type;
};

// Fetches by-reference datastreams (ARC keys).
using Dereferencer = std::function<Output(const std::string& ref)>;

struct TransformInput {
  const didl::DidlDocument& document;  // completed form
  didl::EntityRef target;
  const Dereferencer& dereference;
};

using Transform = std::function<Output(const TransformInput&)>;

struct TransformInfo {
  std::string name;
  std::string input;  // "element" or "document"
  std::string mime_type;
  std::string description;
};

class TransformRegistry {
 public:
  // The built-in transforms, with aliases for the method pointers used in
  // the sample DIP Table.
  static TransformRegistry builtin();

  void add(TransformInfo info, Transform transform);
  void alias(std::string ref, std::string name);
  bool remove(const std::string& name);

  // By name, alias, or `transform:<name>`.
  const Transform* find(std::string_view ref) const;
  std::optional<std::string> resolve_name(std::string_view ref) const;
  std::vector<TransformInfo> list() const;

 private:
  std::map<std::string, std::pair<TransformInfo, Transform>, std::less<>> transforms_;
  std::map<std::string, std::string, std::less<>> aliases_;
};

// One method binding added by the inserter.
struct Insertion {
  std::string service_id;
  std::string host_xml_id;
  std::string correspondence;  // urn:uuid:...
  std::string method_item_id;
};

struct Completion {
  didl::DidlDocument document;
  std::vector<Insertion> insertions;
};

// For every placeholder with DIP Table matches (every match, in document
// order): an ObjectType on the host and a container-level method Item
// carrying the service id and a paired Argument.
Completion complete(const didl::DidlDocument& doc, const DipTable& table);
inline didl::DidlDocument insert_dims(const didl::DidlDocument& doc, const DipTable& table) {
  return complete(doc, table).document;
}
// Removes recorded insertions; inverse of complete().
didl::DidlDocument strip_dims(const didl::DidlDocument& completed,
                              const std::vector<Insertion>& insertions);

// Method Items of a completed document carrying `service_id`.
std::vector<const didl::Item*> method_items(const didl::DidlDocument& doc,
                                            std::string_view service_id);

// The entity a service actually binds to when `target` is requested: the
// target itself when one of its ObjectTypes pairs with the method's
// Arguments, else the first paired direct child Component of a target Item.
std::optional<didl::EntityRef> bound_entity(const didl::DidlDocument& doc,
                                            didl::EntityRef target,
                                            std::string_view service_id);

// Service ids of the method Items in a completed document.
std::vector<std::string> services_in(const didl::DidlDocument& doc);

// Raw dissemination: a Component's first Resource decoded or dereferenced,
// an Item's XML, or the whole document for the Container.
Output raw_output(const didl::DidlDocument& doc, didl::EntityRef entity,
                  const Dereferencer& dereference);

// Serialized XML of one entity, namespace declarations included.
std::string entity_xml(const didl::DidlDocument& doc, didl::EntityRef entity);

class Engine {
 public:
  Engine(const TransformRegistry& registry, const DipTable& table, Dereferencer dereference)
      : registry_(registry), table_(table), dereference_(std::move(dereference)) {}

  // Without a service: raw dissemination of the target. Throws Error:
  // kUnknownTarget, kUnknownService, kServiceNotApplicable,
  // kTransformFailure.
  Output apply(const didl::DidlDocument& completed, const didl::PackageIdentifier& target,
               const std::optional<std::string>& service_id) const;

  const DipTable& table() const { return table_; }
  const TransformRegistry& registry() const { return registry_; }

 private:
  const TransformRegistry& registry_;
  const DipTable& table_;
  Dereferencer dereference_;
};

// Sample DIP Table rows under a deployment namespace (`info:lanl-repo/`
// reproduces the published rows) plus container-level rows for the
// whole-document services.
DipTable sample_table(std::string_view ns);
DipTable deployment_table(std::string_view ns);

inline constexpr std::string_view kModsNs = "http://www.loc.gov/mods/v3";
inline constexpr std::string_view kMarcNs = "http://www.loc.gov/MARC21/slim";
inline constexpr std::string_view kXhtmlNs = "http://www.w3.org/1999/xhtml";
inline constexpr std::string_view kMetsNs = "http://www.loc.gov/METS/";
inline constexpr std::string_view kOaiDcNs = "http://www.openarchives.org/OAI/2.0/oai_dc/";

}  // namespace adore::dip
