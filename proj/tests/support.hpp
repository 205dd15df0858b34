#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <random>
#include <string>

#include "adore/didl.hpp"
#include "adore/util.hpp"

namespace adore::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(ADORE_FIXTURES) + "/" + name;
}

inline std::string fixture(const std::string& name) {
  return read_file(fixture_path(name));
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() / ("adore-" + random_uuid());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const {
    return child.empty() ? path_.string() : (path_ / child).string();
  }

 private:
  std::filesystem::path path_;
};

// Canonical form of a document with minted values replaced by positional
// tokens: element ids, the package id, correspondence `urn:uuid:` values and
// datastream references. Two documents built the same way from the same input
// compare equal; a broken ObjectType/Argument pairing does not.
class Masker {
 public:
  explicit Masker(bool mask_created = false) : mask_created_(mask_created) {}

  std::string canonical(const didl::DidlDocument& doc) {
    xml::Element root = didl::to_element(doc);
    xml::resolve_namespaces(root);
    mask(root);
    return xml::canonical(root);
  }

 private:
  bool mask_created_;
  std::map<std::string, std::string> ids_;
  std::map<std::string, std::string> uuids_;

  static std::string token(std::map<std::string, std::string>& m,
                           const std::string& key, const char* tag) {
    auto it = m.find(key);
    if (it != m.end()) return it->second;
    std::string t = std::string(tag) + std::to_string(m.size());
    m.emplace(key, t);
    return t;
  }

  void mask(xml::Element& e) {
    for (auto& a : e.attributes) {
      std::string_view local = std::string_view(a.name).substr(a.name.find(':') + 1);
      if (a.name == "id") a.value = token(ids_, a.value, "ID");
      if (local == "DIDid") a.value = "PACKAGE";
      if (local == "DIDcreated" && mask_created_) a.value = "CREATED";
      if (a.name == "ref" && a.value.find("/ds/") != std::string::npos) a.value = "DATASTREAM";
    }
    if (e.ns == didl::kDipNs && (e.local == "ObjectType" || e.local == "Argument")) {
      std::string v(trim(e.text()));
      if (v.starts_with("urn:uuid:")) {
        e.children.clear();
        e.add_text(token(uuids_, v, "U"));
      }
    }
    for (auto* c : e.elements()) mask(*c);
  }
};

// Random but valid DID trees for round-trip and scan-oracle properties.
class DidlGenerator {
 public:
  explicit DidlGenerator(unsigned seed) : rng_(seed) {}

  didl::DidlDocument document() {
    didl::Container c;
    c.xml_id = fresh_id();
    c.descriptors.push_back(didl::Descriptor::make_placeholder("info:x/pro/DIDL"));
    int items = pick(0, 3);
    for (int i = 0; i < items; ++i) c.items.push_back(item(0));
    return didl::DidlDocument(
        {"info:x/i/" + std::to_string(counter_++), std::nullopt},
        UtcTimestamp(946684800 + pick(0, 100000000)), std::move(c));
  }

  int pick(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }

 private:
  std::mt19937 rng_;
  int counter_ = 0;

  std::string fresh_id() { return "id-" + std::to_string(counter_++); }

  didl::Item item(int depth) {
    didl::Item it;
    it.xml_id = fresh_id();
    if (pick(0, 1))
      it.descriptors.push_back(didl::Descriptor::make_identifier(
          "info:test/" + std::to_string(counter_++)));
    if (pick(0, 1))
      it.descriptors.push_back(didl::Descriptor::make_placeholder("info:x/pro/f"));
    int n = pick(0, 3);
    for (int i = 0; i < n; ++i) {
      if (depth < 2 && pick(0, 2) == 0) {
        it.children.push_back(didl::ItemChild{item(depth + 1)});
      } else {
        it.children.push_back(didl::ItemChild{component()});
      }
    }
    return it;
  }

  didl::Component component() {
    didl::Component c;
    c.xml_id = fresh_id();
    c.descriptors.push_back(didl::Descriptor::make_placeholder(
        "info:x/fmt/" + std::to_string(pick(1, 9))));
    int n = pick(1, 2);
    for (int i = 0; i < n; ++i) {
      didl::Resource r;
      switch (pick(0, 2)) {
        case 0: {
          r.mime_type = "text/xml";
          xml::Element rec("m:rec");
          rec.set_attribute("xmlns:m", "urn:test:m");
          rec.set_attribute("n", std::to_string(pick(0, 999)));
          rec.add(xml::Element("m:f")).add_text("v & <" + std::to_string(i) + ">");
          xml::resolve_namespaces(rec);
          r.payload = didl::InlineXml{{xml::Node{std::move(rec)}}};
          break;
        }
        case 1:
          r.mime_type = "application/octet-stream";
          r.encoding = didl::Encoding::kBase64;
          r.payload = didl::InlineText{base64_encode("bytes-" + std::to_string(pick(0, 1 << 20)))};
          break;
        default:
          r.mime_type = "application/pdf";
          r.payload = didl::ByReference{"info:x/ds/" + std::to_string(counter_++)};
      }
      c.resources.push_back(std::move(r));
    }
    return c;
  }
};

}  // namespace adore::testing
