#include "doctest.h"

#include "adore/error.hpp"
#include "adore/ingest.hpp"
#include "support.hpp"

using namespace adore;

namespace {

const UtcTimestamp kReferenceCreated = UtcTimestamp::from_civil(2004, 6, 22, 18, 7, 18);

ingest::Options lanl(ingest::BinaryPolicy policy = ingest::BinaryPolicy::kByReference) {
  ingest::Options o;
  o.namespace_prefix = "info:lanl-repo/";
  o.binary_policy = policy;
  return o;
}

ingest::DatastreamSpec stream(std::string bytes, std::string mime, std::string format) {
  ingest::DatastreamSpec ds;
  ds.bytes = std::move(bytes);
  ds.mime_type = std::move(mime);
  ds.format_placeholder = std::move(format);
  return ds;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("manifest parsing") {
  auto m = ingest::load_manifest(testing::fixture_path("sample.manifest"));
  REQUIRE(m.object_content_id);
  CHECK(m.object_content_id->uri == "info:doi/10.123/44455");
  CHECK(m.family_placeholder == "info:lanl-repo/pro/paper");
  REQUIRE(m.datastreams.size() == 2);
  CHECK(m.datastreams[0].content_id->uri == "info:pmid/2225887");
  CHECK(m.datastreams[1].bytes == testing::fixture("paper.pdf"));
  CHECK(!m.datastreams[1].content_id);

  CHECK_THROWS_AS(ingest::parse_manifest("family = x\nbogus = 1\n", "."), Error);
  CHECK_THROWS_AS(ingest::parse_manifest("family = x\n[datastream]\nmime = a/b\n", "."), Error);
}

TEST_CASE("xml mime rule") {
  CHECK(ingest::is_xml_mime("text/xml; charset=UTF-8"));
  CHECK(ingest::is_xml_mime("application/xml"));
  CHECK(ingest::is_xml_mime("application/mods+xml"));
  CHECK(!ingest::is_xml_mime("application/pdf"));
  CHECK(!ingest::is_xml_mime("text/plain"));
  CHECK(!ingest::is_xml_mime("xml"));
}

TEST_CASE("sample object matches the golden package under id masking") {
  auto manifest = ingest::load_manifest(testing::fixture_path("sample.manifest"));
  Clock clock = [] { return kReferenceCreated; };
  auto doc = ingest::build_aip(manifest, nullptr, clock,
                               lanl(ingest::BinaryPolicy::kInlineBase64));
  auto golden = didl::parse_didl(testing::fixture("reference_aip.xml"));
  CHECK(testing::Masker().canonical(doc) == testing::Masker().canonical(golden));
  CHECK(doc.package_id().base.starts_with("info:lanl-repo/i/"));
  CHECK(doc.created() == kReferenceCreated);

  auto ids = didl::extract_identifiers(doc);
  REQUIRE(ids.size() == 2);
  CHECK(ids[0].content_id.uri == "info:doi/10.123/44455");
  CHECK(ids[1].content_id.uri == "info:pmid/2225887");
}

TEST_CASE("by-reference ingest writes the PDF to ARC and nothing else") {
  testing::TempDir dir;
  auto store = arc::ArcStore::open(dir.str("arc"), {.key_prefix = "info:lanl-repo/ds"},
                                   [] { return kReferenceCreated; });
  auto manifest = ingest::load_manifest(testing::fixture_path("sample.manifest"));
  auto doc = ingest::build_aip(manifest, store.get(), [] { return kReferenceCreated; }, lanl());
  CHECK(store->size() == 1);
  const auto& top = doc.container().items.at(0);
  const didl::Component* pdf = top.components().at(0);
  REQUIRE(pdf->resources.size() == 1);
  REQUIRE(pdf->resources[0].by_reference());
  const auto& ref = std::get<didl::ByReference>(pdf->resources[0].payload).ref;
  CHECK(ref.starts_with("info:lanl-repo/ds/"));
  CHECK(store->read(ref).bytes == testing::fixture("paper.pdf"));
  // The PDF Component has no identifier of its own.
  for (const auto& d : pdf->descriptors) CHECK(!d.identifier());
}

TEST_CASE("single inline XML datastream: one Component, no ARC writes") {
  testing::TempDir dir;
  auto store = arc::ArcStore::open(dir.str("arc"), {}, system_clock());
  ingest::ObjectManifest m;
  m.family_placeholder = "info:local-repo/pro/ai";
  m.datastreams.push_back(stream("<r xmlns='urn:r'>x</r>", "application/xml", "info:local-repo/fmt/1"));
  auto doc = ingest::build_aip(m, store.get(), system_clock(), {});
  REQUIRE(doc.container().items.size() == 1);
  const auto& top = doc.container().items[0];
  CHECK(top.children.size() == 1);
  CHECK(top.components().size() == 1);
  CHECK(store->size() == 0);
  CHECK(didl::extract_identifiers(doc).empty());
}

TEST_CASE("two binary streams: ARC holds both payloads by digest") {
  testing::TempDir dir;
  auto store = arc::ArcStore::open(dir.str("arc"), {}, system_clock());
  ingest::ObjectManifest m;
  m.family_placeholder = "info:local-repo/pro/ai";
  m.datastreams.push_back(stream(std::string("\x00\x01\x02", 3), "application/octet-stream", "f/1"));
  m.datastreams.push_back(stream("GIF89a....", "image/gif", "f/2"));
  ingest::build_aip(m, store.get(), system_clock(), {});
  auto records = store->scan();
  REQUIRE(records.size() == 2);
  CHECK(sha256_hex(records[0].payload) == sha256_hex(m.datastreams[0].bytes));
  CHECK(sha256_hex(records[1].payload) == sha256_hex(m.datastreams[1].bytes));
}

TEST_CASE("rejects empty and inconsistent manifests") {
  ingest::ObjectManifest m;
  m.family_placeholder = "f";
  try {
    ingest::build_aip(m, nullptr, system_clock(), {});
    FAIL("empty manifest accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kEmptyManifest);
  }
  m.datastreams.push_back(stream("<a/>", "text/xml", "f/1"));
  m.datastreams.push_back(stream("<b/>", "text/xml", "f/1"));
  m.datastreams[0].content_id = didl::ContentIdentifier{"info:x/1"};
  m.datastreams[1].content_id = didl::ContentIdentifier{"info:x/1"};
  CHECK_THROWS_AS(ingest::build_aip(m, nullptr, system_clock(), {}), Error);
  m.datastreams.pop_back();
  m.datastreams.push_back(stream("%PDF", "application/pdf", "f/5"));
  try {
    ingest::build_aip(m, nullptr, system_clock(), {});
    FAIL("missing ARC store accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kArcWriteFailed);
  }
}

TEST_CASE("re-ingesting makes new packages and leaves stored bytes alone") {
  testing::TempDir dir;
  auto store = arc::ArcStore::open(dir.str("arc"), {.key_prefix = "info:lanl-repo/ds"},
                                   system_clock());
  auto tape = tape::Tape::create(dir.str("tape.xml"));
  auto manifest = ingest::load_manifest(testing::fixture_path("sample.manifest"));
  SteppingClock stepping(kReferenceCreated, 1);
  Clock clock = [&] { return stepping(); };

  auto first = ingest::ingest_version(manifest, store.get(), *tape, clock, lanl());
  std::string before = read_file(dir.str("tape.xml"));
  std::set<std::string> ids{first.package_id().base};
  for (int i = 0; i < 5; ++i) {
    auto doc = ingest::ingest_version(manifest, store.get(), *tape, clock, lanl());
    ids.insert(doc.package_id().base);
    auto found = didl::extract_identifiers(doc);
    CHECK(found.at(1).content_id.uri == "info:pmid/2225887");
  }
  CHECK(ids.size() == 6);
  CHECK(tape->size() == 6);
  std::string after = read_file(dir.str("tape.xml"));
  CHECK(after.compare(0, before.size(), before) == 0);
}

}  // TEST_SUITE
