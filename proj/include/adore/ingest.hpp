#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adore/arc.hpp"
#include "adore/didl.hpp"
#include "adore/tape.hpp"
#include "adore/timestamp.hpp"

// Construction of archival packages from object manifests.
//
// Manifest file format, one object per file. Lines are `key = value`;
// blank lines and lines starting with `#` are skipped. Top-level keys are
// `content_id` (optional) and `family`. Each `[datastream]` line opens a
// datastream section with keys `file` (relative to the manifest), `mime`,
// `format`, and optionally `content_id` and `sub_placeholder`:
//
//   content_id = info:doi/10.123/44455
//   family = info:lanl-repo/pro/paper
//
//   [datastream]
//   file = marc.xml
//   mime = text/xml; charset=UTF-8
//   content_id = info:pmid/2225887
//   format = info:lanl-repo/fmt/3
//
// A batch file lists manifest paths, one per line, relative to itself.
namespace adore::ingest {

struct DatastreamSpec {
  std::string bytes;
  std::string mime_type;
  std::optional<didl::ContentIdentifier> content_id;
  std::string format_placeholder;
  std::optional<std::string> sub_placeholder;
};

struct ObjectManifest {
  std::optional<didl::ContentIdentifier> object_content_id;
  std::string family_placeholder;
  std::vector<DatastreamSpec> datastreams;
};

// Throws Error(kBadManifest) with the offending line.
ObjectManifest parse_manifest(const std::string& text, const std::string& base_dir);
ObjectManifest load_manifest(const std::string& path);
// Manifest paths named by a batch file, resolved against its directory.
std::vector<std::string> read_batch(const std::string& path);

enum class BinaryPolicy {
  kByReference,   // written to the ARC store, Resource carries `ref`
  kInlineBase64,  // embedded with encoding="base64"
};

struct Options {
  // Deployment namespace, ending in '/' (e.g. `info:lanl-repo/`).
  std::string namespace_prefix = "info:local-repo/";
  BinaryPolicy binary_policy = BinaryPolicy::kByReference;

  std::string package_prefix() const { return namespace_prefix + "i"; }
  std::string container_placeholder() const { return namespace_prefix + "pro/DIDL"; }
  std::string metadata_placeholder() const { return namespace_prefix + "pro/metadata"; }
  std::string datastream_key_prefix() const { return namespace_prefix + "ds"; }
};

// True when the MIME subtype is `xml` or ends in `+xml`.
bool is_xml_mime(std::string_view mime);

// Throws Error: kEmptyManifest, kBadManifest, kArcWriteFailed. `arc` may be
// null only when no datastream goes by reference.
didl::DidlDocument build_aip(const ObjectManifest& manifest, arc::ArcStore* arc,
                             const Clock& clock, const Options& options);

// Builds a fresh package and appends it to `tape`. Prior packages are never
// consulted or touched.
didl::DidlDocument ingest_version(const ObjectManifest& manifest,
                                  arc::ArcStore* arc, tape::Tape& tape,
                                  const Clock& clock, const Options& options);

}  // namespace adore::ingest
