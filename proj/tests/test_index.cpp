#include "doctest.h"

#include "adore/conformance.hpp"
#include "adore/harvest.hpp"
#include "adore/repo_index.hpp"
#include "support.hpp"

using namespace adore;

namespace {

const UtcTimestamp kBase = UtcTimestamp::from_civil(2005, 1, 30, 23, 59, 50);

std::string error_in(const std::string& body) {
  auto root = xml::parse(body);
  const xml::Element* e = root.first(oai::kOaiNs, "error");
  return e ? *e->attribute("code") : "";
}

}  // namespace

TEST_SUITE("index") {

TEST_CASE("registration is unique and immediately listed") {
  index::RepositoryIndex idx;
  SteppingClock clock(kBase, 1);
  Clock c = [&] { return clock(); };
  auto e = idx.register_repository("BaseURL(3)", "tape-00003", c);
  CHECK(e.created == kBase);
  try {
    idx.register_repository("BaseURL(3)", "again", c);
    FAIL("duplicate accepted");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::kDuplicateBaseUrl);
  }
  index::IndexRecordSource source(idx, "index:test");
  std::string body = oai::handle(source, {{"verb", "GetRecord"}, {"identifier", "BaseURL(3)"},
                                          {"metadataPrefix", "INDEX"}}, kBase);
  CHECK(error_in(body).empty());
  CHECK(body.find("<datestamp>2005-01-30T23:59:50Z</datestamp>") != std::string::npos);
  CHECK(body.find("<baseURL>BaseURL(3)</baseURL>") != std::string::npos);
  CHECK(error_in(oai::handle(source, {{"verb", "GetRecord"}, {"identifier", "BaseURL(3)"},
                                      {"metadataPrefix", "DIDL"}}, kBase)) ==
        "cannotDisseminateFormat");
  CHECK(error_in(oai::handle(source, {{"verb", "ListRecords"}, {"metadataPrefix", "INDEX"},
                                      {"from", "2005-01-31T00:00:00Z"}}, kBase)) ==
        "noRecordsMatch");
}

TEST_CASE("50 registrations harvest back in registration order") {
  index::RepositoryIndex idx;
  SteppingClock clock(kBase, 1);
  Clock c = [&] { return clock(); };
  for (int i = 0; i < 50; ++i)
    idx.register_repository("repo:" + std::to_string(i), "meta <" + std::to_string(i) + ">", c);
  index::IndexRecordSource source(idx, "index:test");
  InProcessTransport net;
  net.route("index:test", oai::make_handler(source, system_clock(), {8}));
  oai::Harvester h(net);
  auto records = h.harvest_all("index:test", {"INDEX"});
  REQUIRE(records.size() == 50);
  for (int i = 0; i < 50; ++i) {
    auto e = index::parse_index_metadata(records[i].metadata);
    CHECK(e.base_url == "repo:" + std::to_string(i));
    CHECK(e.meta == "meta <" + std::to_string(i) + ">");
    CHECK(e.created == kBase + i);
    CHECK(records[i].header.identifier == e.base_url);
  }
  // Incremental: only newer registrations.
  idx.register_repository("repo:late", "", c);
  auto late = h.harvest_all("index:test", {"INDEX", records.back().header.datestamp + 1});
  REQUIRE(late.size() == 1);
  CHECK(late[0].header.identifier == "repo:late");
}

TEST_CASE("journal replays to the same index") {
  testing::TempDir dir;
  SteppingClock clock(kBase, 3);
  Clock c = [&] { return clock(); };
  std::vector<index::RepoEntry> want;
  {
    auto idx = index::RepositoryIndex::open(dir.str("index.journal"));
    want.push_back(idx.register_repository("http://a/oai", "tab\tand\nnewline", c));
    want.push_back(idx.register_repository("http://b/oai", "", c));
  }
  auto again = index::RepositoryIndex::open(dir.str("index.journal"));
  CHECK(again.entries() == want);
  CHECK_THROWS_AS(again.register_repository("http://a/oai", "", c), Error);
  write_file(dir.str("bad.journal"), "x\ty\n");
  CHECK_THROWS_AS(index::RepositoryIndex::open(dir.str("bad.journal")), Error);
}

TEST_CASE("index passes the conformance suite") {
  index::RepositoryIndex idx;
  SteppingClock clock(kBase, 0);
  Clock c = [&] { return clock(); };
  // Registrations that share seconds and straddle midnight.
  for (int i = 0; i < 40; ++i) {
    if (i % 3 == 0) clock.set(clock.peek() + 4);
    idx.register_repository("repo:" + std::to_string(i), "", c);
  }
  index::IndexRecordSource source(idx, "index:test");
  auto report = oai::check_conformance(source, {"INDEX"});
  for (const auto& f : report.failures) MESSAGE(f);
  CHECK(report.ok());
}

}  // TEST_SUITE
