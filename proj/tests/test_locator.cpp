#include "doctest.h"

#include <random>

#include "adore/locator.hpp"
#include "adore/repo_index.hpp"
#include "adore/repository.hpp"
#include "support.hpp"

using namespace adore;
using locator::ContentRow;
using locator::FetchPlan;
using locator::PackageRow;

namespace {

const UtcTimestamp kBase = UtcTimestamp::from_civil(2004, 6, 22, 18, 7, 18);
const std::string kPkg = "info:lanl-repo/i/58f202ac";

std::unique_ptr<locator::Locator> tables() {
  auto loc = std::make_unique<locator::Locator>();
  loc->put(locator::parse_batch(testing::fixture("locator_tables.tsv")));
  return loc;
}

Errc resolve_error(const locator::PlanResolver& r, const std::string& id) {
  try {
    r.resolve(id);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInvalidArgument;
}

// A small environment: an index plus tape-backed repositories, all routed
// in-process.
struct Environment {
  testing::TempDir dir;
  InProcessTransport net;
  index::RepositoryIndex idx;
  index::IndexRecordSource index_source{idx, "index:test"};
  std::vector<std::unique_ptr<repo::TapeRepository>> repos;
  SteppingClock clock{kBase, 1};
  Clock tick = [this] { return clock(); };

  Environment() { net.route("index:test", oai::make_handler(index_source, system_clock())); }

  repo::TapeRepository& add_repo(const std::string& base) {
    auto tape = tape::Tape::create(dir.str(std::to_string(repos.size()) + ".tape"));
    repos.push_back(std::make_unique<repo::TapeRepository>(base, base, std::move(tape)));
    net.route(base, oai::make_handler(*repos.back(), system_clock(), {4}));
    idx.register_repository(base, "", tick);
    return *repos.back();
  }
};

didl::DidlDocument reference_version(UtcTimestamp created, const std::string& package_id) {
  auto doc = didl::parse_didl(testing::fixture("reference_aip.xml"));
  return didl::DidlDocument({package_id, std::nullopt}, created, doc.container(),
                            doc.root_attributes());
}

}  // namespace

TEST_SUITE("locator") {

TEST_CASE("walkthrough resolutions over the sample tables") {
  auto loc = tables();
  CHECK(loc->resolve(kPkg) == std::vector<FetchPlan>{{"BaseURL(3)", kPkg, std::nullopt}});
  CHECK(loc->resolve(kPkg + "#uuid-00005e90") ==
        std::vector<FetchPlan>{{"BaseURL(3)", kPkg, "uuid-00005e90"}});
  CHECK(loc->resolve("info:lanl-repo/biosis/abcdef") ==
        std::vector<FetchPlan>{{"BaseURL(6)", "info:lanl-repo/i/002035b2", "uuid-00007y55"}});
  CHECK(loc->resolve("info:doi/10.123/44455") ==
        std::vector<FetchPlan>{{"BaseURL(3)", kPkg, "uuid-00005e90"}});
  auto versions = loc->resolve("info:pmid/2225887");
  REQUIRE(versions.size() == 2);
  CHECK(versions[0] == FetchPlan{"BaseURL(3)", kPkg, "uuid-8881b35e"});
  CHECK(versions[1] == FetchPlan{std::nullopt, "info:lanl-repo/i/12e303be", "uuid-875646ae"});
  CHECK(resolve_error(*loc, "info:lanl-repo/i/ffffffff") == Errc::kNotFound);
  CHECK(resolve_error(*loc, "info:lanl-repo/i/ffffffff#uuid-1") == Errc::kNotFound);
}

TEST_CASE("loading is idempotent and conflicts are rejected whole") {
  auto loc = tables();
  auto before_p = loc->packages();
  auto before_c = loc->contents();
  CHECK(loc->put(locator::parse_batch(testing::fixture("locator_tables.tsv"))) == 0);
  CHECK(loc->packages() == before_p);
  CHECK(loc->contents() == before_c);
  std::vector<locator::Row> batch{ContentRow{"info:x/new", kPkg, "uuid-1"},
                                  PackageRow{kPkg, "BaseURL(4)", std::nullopt}};
  try {
    loc->put(batch);
    FAIL("conflicting package row accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kConflictingPackageRow);
  }
  CHECK(loc->contents() == before_c);
  CHECK_THROWS_AS(locator::parse_batch("P\tonly-two\n"), Error);
  CHECK_THROWS_AS(locator::parse_batch("X\ta\tb\tc\n"), Error);
}

TEST_CASE("versions come back newest first") {
  locator::Locator loc;
  std::vector<std::pair<std::string, std::int64_t>> versions{
      {"p:b", 20}, {"p:a", 10}, {"p:c", 30}, {"p:d", -1}, {"p:e", -1}};
  for (const auto& [pid, t] : versions) {
    std::optional<UtcTimestamp> created;
    if (t >= 0) created = kBase + t;
    loc.put(PackageRow{pid, "r", created});
    loc.put(ContentRow{"c:1", pid, "x"});
  }
  std::vector<std::string> order;
  for (const auto& p : loc.resolve("c:1")) order.push_back(p.package_id);
  CHECK(order == std::vector<std::string>{"p:c", "p:b", "p:a", "p:d", "p:e"});
}

TEST_CASE("persistent locator replays rows and harvest state") {
  testing::TempDir dir;
  {
    auto loc = locator::Locator::open(dir.str("loc"));
    loc->put(locator::parse_batch(testing::fixture("locator_tables.tsv")));
    loc->set_harvested_until("BaseURL(3)", kBase);
  }
  auto again = locator::Locator::open(dir.str("loc"));
  CHECK(again->packages() == tables()->packages());
  CHECK(again->contents() == tables()->contents());
  CHECK(again->harvested_until("BaseURL(3)") == kBase);
  CHECK(!again->harvested_until("BaseURL(6)"));
}

TEST_CASE("populating from harvest") {
  Environment env;
  locator::Locator loc;
  oai::Harvester h(env.net);

  SUBCASE("empty environment yields zero rows") {
    auto stats = locator::populate_from_harvest(loc, h, "index:test");
    CHECK(stats.repositories == 0);
    CHECK(loc.package_count() == 0);
    CHECK(loc.content_count() == 0);
  }

  SUBCASE("one repository holding the sample package") {
    auto& r = env.add_repo("BaseURL(3)");
    r.tape().append(didl::parse_didl(testing::fixture("reference_aip.xml")));
    auto stats = locator::populate_from_harvest(loc, h, "index:test");
    CHECK(stats.failures.empty());
    CHECK(stats.rows_inserted == 3);
    CHECK(loc.packages() == std::vector<PackageRow>{{kPkg, "BaseURL(3)", kBase}});
    CHECK(loc.contents() ==
          std::vector<ContentRow>{{"info:doi/10.123/44455", kPkg, "uuid-00005e90"},
                                  {"info:pmid/2225887", kPkg, "uuid-8881b35e"}});
  }

  SUBCASE("second run inserts exactly the new package's rows") {
    auto& r = env.add_repo("BaseURL(3)");
    r.tape().append(reference_version(kBase, kPkg));
    locator::populate_from_harvest(loc, h, "index:test");
    auto before = loc.contents();
    r.tape().append(reference_version(kBase + 60, "info:lanl-repo/i/12e303be"));
    auto stats = locator::populate_from_harvest(loc, h, "index:test");
    CHECK(stats.rows_inserted == 3);
    CHECK(loc.package_count() == 2);
    CHECK(loc.content_count() == before.size() + 2);
    auto plans = loc.resolve("info:pmid/2225887");
    REQUIRE(plans.size() == 2);
    CHECK(plans[0].package_id == "info:lanl-repo/i/12e303be");
    CHECK(plans[1].package_id == kPkg);
  }

  SUBCASE("a failing repository does not block the others") {
    auto& good = env.add_repo("repo:good");
    env.idx.register_repository("repo:down", "", env.tick);
    good.tape().append(reference_version(kBase, kPkg));
    auto stats = locator::populate_from_harvest(loc, h, "index:test");
    REQUIRE(stats.failures.size() == 1);
    CHECK(stats.failures[0].first == "repo:down");
    CHECK(loc.package_count() == 1);
  }
}

TEST_CASE("completeness and soundness over a generated environment") {
  Environment env;
  testing::DidlGenerator gen(17);
  std::map<std::string, std::size_t> fanout;
  for (int r = 0; r < 3; ++r) {
    auto& repo = env.add_repo("repo:" + std::to_string(r));
    for (int i = 0; i < 40; ++i) {
      auto doc = gen.document();
      repo.tape().append(doc);
      for (const auto& ref : didl::extract_identifiers(doc)) ++fanout[ref.content_id.uri];
    }
  }
  locator::Locator loc;
  oai::Harvester h(env.net);
  auto stats = locator::populate_from_harvest(loc, h, "index:test");
  CHECK(stats.records == 120);
  CHECK(loc.package_count() == 120);
  for (const auto& r : env.repos) {
    for (const auto& e : r->tape().entries()) {
      auto plans = loc.resolve(e.package_id);
      REQUIRE(plans.size() == 1);
      CHECK(plans[0].repo_base_url == r->base_url());
    }
  }
  REQUIRE(!fanout.empty());
  for (const auto& [cid, count] : fanout) {
    auto plans = loc.resolve(cid);
    CHECK(plans.size() == count);
    for (const auto& p : plans) {
      auto rec = h.get_record(*p.repo_base_url, p.package_id, "DIDL");
      auto doc = didl::parse_didl(rec.metadata);
      bool found = false;
      for (const auto& ref : didl::extract_identifiers(doc))
        found |= ref.content_id.uri == cid && ref.xml_id == p.xml_id;
      CHECK(found);
    }
  }
}

TEST_CASE("identifiers-only records carry the same rows") {
  auto doc = didl::parse_didl(testing::fixture("reference_aip.xml"));
  auto rows = locator::rows_from_identifiers(locator::identifiers_xml(doc), "BaseURL(3)");
  CHECK(rows == locator::rows_for(doc, "BaseURL(3)"));
}

TEST_CASE("lookup endpoint and remote client agree with the local table") {
  auto loc = tables();
  InProcessTransport net;
  net.route("locator:test", locator::make_locator_handler(*loc));
  locator::RemoteLocator remote(net, "locator:test");
  for (std::string id : {kPkg, kPkg + "#uuid-00005e90", std::string("info:pmid/2225887"),
                         std::string("info:lanl-repo/biosis/abcdef")})
    CHECK(remote.resolve(id) == loc->resolve(id));
  CHECK(resolve_error(remote, "info:none") == Errc::kNotFound);
  CHECK(net.get("locator:test", {}).status == 400);
  locator::RemoteLocator down(net, "locator:down");
  CHECK(resolve_error(down, kPkg) == Errc::kUpstreamUnavailable);
}

}  // TEST_SUITE
