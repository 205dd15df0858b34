#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "adore/arc.hpp"
#include "adore/error.hpp"
#include "adore/tape.hpp"
#include "adore/xml.hpp"
#include "support.hpp"

using namespace adore;

namespace {

Clock fixed_clock(std::int64_t t = 1087927638) {
  return [t] { return UtcTimestamp(t); };
}

std::unique_ptr<arc::ArcStore> open_arc(const testing::TempDir& dir) {
  return arc::ArcStore::open(dir.str("arc"), {.key_prefix = "info:x/ds"}, fixed_clock());
}

didl::DidlDocument doc_at(const std::string& id, std::int64_t t) {
  didl::Container c;
  c.xml_id = "c-" + id;
  c.descriptors.push_back(didl::Descriptor::make_placeholder("info:x/pro/DIDL"));
  return didl::DidlDocument({"info:x/i/" + id, std::nullopt}, UtcTimestamp(t), std::move(c));
}

void expect_error(Errc code, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("expected " << errc_name(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_SUITE("arc") {

TEST_CASE("small, empty, and binary payloads round-trip") {
  testing::TempDir dir;
  auto store = open_arc(dir);
  std::string key = store->write("hello", "text/plain");
  CHECK(key.starts_with("info:x/ds/"));
  auto got = store->read(key);
  CHECK(got.bytes == "hello");
  CHECK(got.mime == "text/plain");

  std::string empty_key = store->write("", "application/octet-stream");
  CHECK(store->read(empty_key).bytes.empty());

  std::string pdf = testing::fixture("paper.pdf");
  std::string pdf_key = store->write(pdf, "application/pdf");
  CHECK(sha256_hex(store->read(pdf_key).bytes) == sha256_hex(pdf));

  // Content types with spaces survive the header line.
  std::string typed = store->write("<a/>", "text/xml; charset=UTF-8");
  CHECK(store->read(typed).mime == "text/xml; charset=UTF-8");
}

TEST_CASE("unknown keys are rejected") {
  testing::TempDir dir;
  auto store = open_arc(dir);
  expect_error(Errc::kUnknownKey, [&] { store->read("info:x/ds/none"); });
}

TEST_CASE("file layout starts with a version block and v1 headers") {
  testing::TempDir dir;
  auto store = open_arc(dir);
  std::string key = store->write("hello", "text/plain");
  std::string file = read_file(dir.str("arc/arc-00000.arc"));
  CHECK(file.starts_with("filedesc://arc-00000.arc 0.0.0.0 20040622180718 text/plain "));
  CHECK(file.find("\n1 0 adore\n") != std::string::npos);
  CHECK(file.find(key + " 0.0.0.0 20040622180718 text/plain 5\nhello\n") != std::string::npos);
}

TEST_CASE("random payloads: read(write(p)) == p and scan equals index") {
  testing::TempDir dir;
  auto store = arc::ArcStore::open(dir.str("arc"),
                                   {.key_prefix = "info:x/ds", .max_file_bytes = 4096},
                                   fixed_clock());
  std::mt19937 rng(7);
  std::vector<std::pair<std::string, std::string>> written;
  for (int i = 0; i < 200; ++i) {
    std::string p(std::uniform_int_distribution<int>(0, 300)(rng), '\0');
    for (char& c : p) c = static_cast<char>(rng());
    written.emplace_back(store->write(p, "application/octet-stream"), p);
  }
  for (const auto& [key, payload] : written) CHECK(store->read(key).bytes == payload);
  CHECK(store->scan_index() == store->index());
  CHECK(std::filesystem::exists(dir.str("arc/arc-00001.arc")));

  auto records = store->scan();
  REQUIRE(records.size() == written.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].url_key == written[i].first);
    CHECK(records[i].payload == written[i].second);
  }
}

TEST_CASE("index is rebuilt from the files when the sidecar is lost") {
  testing::TempDir dir;
  std::vector<arc::IndexEntry> before;
  std::string key;
  {
    auto store = open_arc(dir);
    key = store->write("alpha", "text/plain");
    store->write("beta", "text/plain");
    before = store->index();
  }
  std::filesystem::remove(dir.str("arc/index.tsv"));
  auto reopened = open_arc(dir);
  CHECK(reopened->index() == before);
  CHECK(reopened->read(key).bytes == "alpha");
  reopened->write("gamma", "text/plain");
  CHECK(reopened->size() == 3);
}

TEST_CASE("truncation and length mismatch are reported as corrupt") {
  testing::TempDir dir;
  auto store = open_arc(dir);
  std::string first = store->write("first", "text/plain");
  std::string last = store->write("0123456789", "text/plain");
  std::string path = dir.str("arc/arc-00000.arc");
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 4);
  expect_error(Errc::kCorruptRecord, [&] { store->read(last); });
  expect_error(Errc::kCorruptRecord, [&] { store->scan(); });
  CHECK(store->read(first).bytes == "first");

  // Same size, wrong declared length.
  testing::TempDir dir2;
  auto store2 = open_arc(dir2);
  std::string k = store2->write("abcde", "text/plain");
  std::string p2 = dir2.str("arc/arc-00000.arc");
  std::string bytes = read_file(p2);
  auto pos = bytes.find(" text/plain 5\n");
  bytes.replace(pos, 14, " text/plain 4\n");
  write_file(p2, bytes);
  expect_error(Errc::kCorruptRecord, [&] { store2->read(k); });
}

}  // TEST_SUITE

TEST_SUITE("tape") {

TEST_CASE("append, get and exact bytes") {
  testing::TempDir dir;
  auto tape = tape::Tape::create(dir.str("t.xml"));
  auto aip = didl::parse_didl(testing::fixture("reference_aip.xml"));
  tape->append(aip);
  auto rec = tape->get("info:lanl-repo/i/58f202ac");
  CHECK(rec.datestamp.iso8601() == "2004-06-22T18:07:18Z");
  CHECK(rec.didl_bytes == didl::serialize_didl(aip, false));
  CHECK(didl::structurally_equal(didl::parse_didl(rec.didl_bytes), aip));
  expect_error(Errc::kDuplicatePackageId, [&] { tape->append(aip); });
  expect_error(Errc::kUnknownPackageId, [&] { tape->get("info:lanl-repo/i/none"); });
}

TEST_CASE("sealing yields a well-formed document and freezes the tape") {
  testing::TempDir dir;
  auto empty = tape::Tape::create(dir.str("empty.xml"));
  empty->seal();
  auto root = xml::parse(read_file(dir.str("empty.xml")));
  CHECK(root.ns == tape::kTapeNs);
  CHECK(root.elements().empty());
  expect_error(Errc::kTapeSealed, [&] { empty->append(doc_at("a", 1)); });

  auto reopened = tape::Tape::open(dir.str("empty.xml"));
  CHECK(reopened->sealed());
  expect_error(Errc::kTapeSealed, [&] { reopened->append(doc_at("a", 1)); });
}

TEST_CASE("1,000 generated documents: streaming scan equals the index") {
  testing::TempDir dir;
  std::string path = dir.str("big.xml");
  testing::DidlGenerator gen(11);
  std::vector<didl::DidlDocument> docs;
  {
    auto tape = tape::Tape::create(path);
    for (int i = 0; i < 1000; ++i) {
      docs.push_back(gen.document());
      tape->append(docs.back());
    }
    tape->seal();
    CHECK(tape->size() == 1000);
  }
  auto root = xml::parse(read_file(path));
  CHECK(root.elements().size() == 1000);

  auto tape = tape::Tape::open(path);
  auto scanned = tape::Tape::scan(path);
  REQUIRE(scanned.size() == 1000);
  CHECK(scanned == tape->entries());
  auto records = tape::Tape::scan_records(path);
  for (size_t i = 0; i < docs.size(); ++i) {
    auto rec = tape->get(docs[i].package_id().base);
    CHECK(rec.didl_bytes == records[i].didl_bytes);
    CHECK(rec.datestamp == docs[i].created());
  }
}

TEST_CASE("list bounds are inclusive and ordered; ties keep append order") {
  testing::TempDir dir;
  auto tape = tape::Tape::create(dir.str("t.xml"));
  tape->append(doc_at("c", 30));
  tape->append(doc_at("a", 10));
  tape->append(doc_at("b1", 20));
  tape->append(doc_at("b2", 20));
  auto ids = [](const std::vector<tape::TapeRecord>& rs) {
    std::vector<std::string> out;
    for (const auto& r : rs) out.push_back(r.package_id.substr(9));
    return out;
  };
  CHECK(ids(tape->list(std::nullopt, std::nullopt)) ==
        std::vector<std::string>{"a", "b1", "b2", "c"});
  CHECK(ids(tape->list(UtcTimestamp(20), UtcTimestamp(20))) ==
        std::vector<std::string>{"b1", "b2"});
  CHECK(ids(tape->list(UtcTimestamp(21), std::nullopt)) == std::vector<std::string>{"c"});
  expect_error(Errc::kBadRange, [&] { tape->list(UtcTimestamp(5), UtcTimestamp(4)); });

  auto page = tape->select(std::nullopt, std::nullopt, tape::Cursor{UtcTimestamp(20), 2}, 10);
  REQUIRE(page.size() == 2);
  CHECK(page[0].package_id == "info:x/i/b2");
}

TEST_CASE("random ranges equal a brute-force filter over the scan") {
  testing::TempDir dir;
  auto tape = tape::Tape::create(dir.str("t.xml"));
  std::mt19937 rng(3);
  for (int i = 0; i < 300; ++i)
    tape->append(doc_at(std::to_string(i), std::uniform_int_distribution<int>(0, 100)(rng)));
  auto all = tape::Tape::scan_records(dir.str("t.xml"));
  for (int trial = 0; trial < 200; ++trial) {
    int a = std::uniform_int_distribution<int>(-5, 105)(rng);
    int b = std::uniform_int_distribution<int>(a, 110)(rng);
    std::optional<UtcTimestamp> from, until;
    if (trial % 3 != 0) from = UtcTimestamp(a);
    if (trial % 4 != 0) until = UtcTimestamp(b);
    std::vector<std::pair<std::int64_t, std::string>> expect;
    for (size_t i = 0; i < all.size(); ++i) {
      auto t = all[i].datestamp;
      if ((!from || t >= *from) && (!until || t <= *until))
        expect.emplace_back(t.seconds(), all[i].package_id);
    }
    std::stable_sort(expect.begin(), expect.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    auto got = tape->list(from, until);
    REQUIRE(got.size() == expect.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i].package_id == expect[i].second);
  }
}

TEST_CASE("open tapes can be reopened, rebuilt and appended") {
  testing::TempDir dir;
  std::string path = dir.str("t.xml");
  {
    auto tape = tape::Tape::create(path);
    tape->append(doc_at("a", 1));
    tape->append(doc_at("b", 2));
  }
  std::filesystem::remove(tape::Tape::index_path(path));
  auto tape = tape::Tape::open(path);
  CHECK(!tape->sealed());
  CHECK(tape->size() == 2);
  tape->append(doc_at("c", 3));
  tape->seal();
  auto again = tape::Tape::open(path);
  CHECK(again->size() == 3);
  CHECK(again->get("info:x/i/c").datestamp == UtcTimestamp(3));
  CHECK(xml::parse(read_file(path)).elements().size() == 3);
}

}  // TEST_SUITE
