#include "adore/ingest.hpp"

#include <cctype>
#include <filesystem>
#include <set>

#include "adore/error.hpp"
#include "adore/util.hpp"

namespace adore::ingest {
namespace {

namespace fs = std::filesystem;

std::string wrap_base64(std::string_view bytes) {
  std::string encoded = base64_encode(bytes);
  std::string out;
  out.reserve(encoded.size() + encoded.size() / 64 + 1);
  for (size_t i = 0; i < encoded.size(); i += 64) {
    if (i) out.push_back('\n');
    out.append(encoded, i, 64);
  }
  return out;
}

didl::Resource base64_resource(const DatastreamSpec& ds) {
  didl::Resource r;
  r.mime_type = ds.mime_type;
  r.encoding = didl::Encoding::kBase64;
  r.payload = didl::InlineText{wrap_base64(ds.bytes)};
  return r;
}

didl::Resource make_resource(const DatastreamSpec& ds, arc::ArcStore* arc,
                             const Options& options) {
  if (is_xml_mime(ds.mime_type)) {
    try {
      didl::Resource r;
      r.mime_type = ds.mime_type;
      r.payload = didl::InlineXml{{xml::Node{
          xml::parse(ds.bytes, {.keep_comments = true})}}};
      return r;
    } catch (const Error&) {
      // Declared XML that does not parse is kept verbatim as base64.
      return base64_resource(ds);
    }
  }
  if (options.binary_policy == BinaryPolicy::kInlineBase64) return base64_resource(ds);
  if (!arc) throw Error(Errc::kArcWriteFailed, "no ARC store configured");
  didl::Resource r;
  r.mime_type = ds.mime_type;
  try {
    r.payload = didl::ByReference{arc->write(ds.bytes, ds.mime_type)};
  } catch (const Error& e) {
    throw Error(Errc::kArcWriteFailed, e.what());
  }
  return r;
}

void validate(const ObjectManifest& m) {
  if (m.datastreams.empty()) throw Error(Errc::kEmptyManifest, "manifest has no datastreams");
  if (trim(m.family_placeholder).empty())
    throw Error(Errc::kBadManifest, "manifest has no family placeholder");
  std::set<std::string> seen;
  if (m.object_content_id) seen.insert(m.object_content_id->uri);
  for (size_t i = 0; i < m.datastreams.size(); ++i) {
    const auto& ds = m.datastreams[i];
    std::string where = "datastream " + std::to_string(i + 1);
    if (trim(ds.mime_type).empty()) throw Error(Errc::kBadManifest, where + " has no mime");
    if (trim(ds.format_placeholder).empty())
      throw Error(Errc::kBadManifest, where + " has no format placeholder");
    if (ds.content_id && !seen.insert(ds.content_id->uri).second)
      throw Error(Errc::kBadManifest,
                  where + " repeats content identifier " + ds.content_id->uri);
  }
}

}  // namespace

bool is_xml_mime(std::string_view mime) {
  std::string_view type = trim(mime.substr(0, mime.find(';')));
  size_t slash = type.find('/');
  if (slash == std::string_view::npos) return false;
  std::string sub(type.substr(slash + 1));
  for (char& c : sub) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return sub == "xml" || sub.ends_with("+xml");
}

ObjectManifest parse_manifest(const std::string& text, const std::string& base_dir) {
  ObjectManifest m;
  DatastreamSpec* ds = nullptr;
  std::optional<std::string> file;
  auto finish = [&](int line_no) {
    if (!ds) return;
    if (!file)
      throw Error(Errc::kBadManifest,
                  "datastream ending at line " + std::to_string(line_no) + " has no file");
    fs::path p(*file);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    ds->bytes = read_file(p.string());
    file.reset();
  };
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[datastream]") {
      finish(line_no);
      m.datastreams.emplace_back();
      ds = &m.datastreams.back();
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::kBadManifest, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    auto bad_key = [&] {
      return Error(Errc::kBadManifest,
                   "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    };
    if (!ds) {
      if (key == "content_id") {
        m.object_content_id = didl::ContentIdentifier{value};
      } else if (key == "family") {
        m.family_placeholder = value;
      } else {
        throw bad_key();
      }
    } else if (key == "file") {
      file = value;
    } else if (key == "mime") {
      ds->mime_type = value;
    } else if (key == "content_id") {
      ds->content_id = didl::ContentIdentifier{value};
    } else if (key == "format") {
      ds->format_placeholder = value;
    } else if (key == "sub_placeholder") {
      ds->sub_placeholder = value;
    } else {
      throw bad_key();
    }
  }
  finish(line_no);
  return m;
}

ObjectManifest load_manifest(const std::string& path) {
  return parse_manifest(read_file(path), fs::path(path).parent_path().string());
}

std::vector<std::string> read_batch(const std::string& path) {
  fs::path base = fs::path(path).parent_path();
  std::vector<std::string> out;
  for (const auto& raw : split(read_file(path), '\n')) {
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    fs::path p{std::string(line)};
    out.push_back(p.is_relative() ? (base / p).string() : p.string());
  }
  return out;
}

didl::DidlDocument build_aip(const ObjectManifest& manifest, arc::ArcStore* arc,
                             const Clock& clock, const Options& options) {
  validate(manifest);
  didl::Container container;
  container.xml_id = didl::mint_xml_id();
  container.descriptors.push_back(
      didl::Descriptor::make_placeholder(options.container_placeholder()));

  didl::Item top;
  top.xml_id = didl::mint_xml_id();
  if (manifest.object_content_id)
    top.descriptors.push_back(
        didl::Descriptor::make_identifier(manifest.object_content_id->uri));
  top.descriptors.push_back(
      didl::Descriptor::make_placeholder(manifest.family_placeholder));

  for (const auto& ds : manifest.datastreams) {
    didl::Component c;
    c.xml_id = didl::mint_xml_id();
    c.descriptors.push_back(didl::Descriptor::make_placeholder(ds.format_placeholder));
    c.resources.push_back(make_resource(ds, arc, options));
    if (ds.content_id) {
      didl::Item sub;
      sub.xml_id = didl::mint_xml_id();
      sub.descriptors.push_back(didl::Descriptor::make_identifier(ds.content_id->uri));
      sub.descriptors.push_back(didl::Descriptor::make_placeholder(
          ds.sub_placeholder.value_or(options.metadata_placeholder())));
      sub.children.push_back(didl::ItemChild{std::move(c)});
      top.children.push_back(didl::ItemChild{std::move(sub)});
    } else {
      top.children.push_back(didl::ItemChild{std::move(c)});
    }
  }
  container.items.push_back(std::move(top));
  return didl::DidlDocument(didl::mint_package_id(options.package_prefix()), clock(),
                            std::move(container));
}

didl::DidlDocument ingest_version(const ObjectManifest& manifest,
                                  arc::ArcStore* arc, tape::Tape& tape,
                                  const Clock& clock, const Options& options) {
  didl::DidlDocument doc = build_aip(manifest, arc, clock, options);
  tape.append(doc);
  return doc;
}

}  // namespace adore::ingest
