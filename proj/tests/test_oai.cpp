#include "doctest.h"

#include <chrono>
#include <random>
#include <set>

#include "adore/conformance.hpp"
#include "adore/harvest.hpp"
#include "adore/repository.hpp"
#include "support.hpp"

using namespace adore;
using oai::OaiErrc;

namespace {

const UtcTimestamp kBase = UtcTimestamp::from_civil(2004, 6, 22, 18, 7, 18);

// Documents with datestamps drawn from a narrow window so that several
// records share a second and some straddle midnight.
didl::DidlDocument dated(testing::DidlGenerator& gen, UtcTimestamp created) {
  auto d = gen.document();
  return didl::DidlDocument(d.package_id(), created, d.container(), d.root_attributes());
}

struct Repo {
  testing::TempDir dir;
  std::shared_ptr<tape::Tape> tape = tape::Tape::create(dir.str("tape.xml"));
  repo::TapeRepository source{"test", "repo:test", tape};
  testing::DidlGenerator gen{1};

  void fill(std::size_t n, unsigned seed, UtcTimestamp start = kBase, int spread = 3) {
    std::mt19937 rng(seed);
    UtcTimestamp t = start;
    for (std::size_t i = 0; i < n; ++i) {
      t = t + std::uniform_int_distribution<int>(0, spread)(rng);
      tape->append(dated(gen, t));
    }
  }
};

std::optional<OaiErrc> parse_code(const QueryParams& q) {
  try {
    oai::parse_request(q);
    return std::nullopt;
  } catch (const oai::OaiError& e) {
    return e.code();
  }
}

std::string error_in(const std::string& body) {
  auto root = xml::parse(body);
  const xml::Element* e = root.first(oai::kOaiNs, "error");
  return e ? *e->attribute("code") : "";
}

}  // namespace

TEST_SUITE("oai") {

TEST_CASE("request parsing") {
  auto req = oai::parse_request({{"verb", "GetRecord"},
                                 {"identifier", "info:lanl-repo/i/58f202ac"},
                                 {"metadataPrefix", "DIDL"}});
  CHECK(req.verb == oai::Verb::kGetRecord);
  CHECK(req.identifier == "info:lanl-repo/i/58f202ac");
  CHECK(req.metadata_prefix == "DIDL");
  CHECK(parse_code({{"verb", "Bogus"}}) == OaiErrc::kBadVerb);
  CHECK(parse_code({{"verb", "ListRecords"}, {"from", "2004-13-99"}}) == OaiErrc::kBadArgument);
  CHECK(parse_code({{"verb", "ListRecords"}, {"metadataPrefix", "DIDL"}, {"from", "2004-13-99"}}) ==
        OaiErrc::kBadArgument);

  auto day = oai::parse_request(
      {{"verb", "ListRecords"}, {"metadataPrefix", "DIDL"}, {"until", "2004-06-22"}});
  CHECK(day.until->iso8601() == "2004-06-22T23:59:59Z");
}

TEST_CASE("date validation agrees with the calendar oracle on fuzzed input") {
  std::mt19937 rng(7);
  auto num = [&](int lo, int hi, int width) {
    std::string s = std::to_string(std::uniform_int_distribution<int>(lo, hi)(rng));
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
  };
  int accepted = 0;
  for (int i = 0; i < 5000; ++i) {
    std::string d = num(1900, 2100, 4) + "-" + num(0, 13, 2) + "-" + num(0, 32, 2);
    if (rng() % 2) d += "T" + num(0, 25, 2) + ":" + num(0, 61, 2) + ":" + num(0, 61, 2) + "Z";
    if (rng() % 10 == 0) d.erase(rng() % d.size(), 1);
    QueryParams q{{"verb", "ListIdentifiers"}, {"metadataPrefix", "DIDL"}, {"from", d}};
    auto want = oai::expected_legality(q);
    CHECK_MESSAGE(parse_code(q) == want, d);
    accepted += !want;
  }
  CHECK(accepted > 500);
}

TEST_CASE("legality oracle agrees with the parser over the argument matrix") {
  const char* verbs[] = {"Identify", "ListMetadataFormats", "ListSets", "GetRecord",
                         "ListIdentifiers", "ListRecords", "Nope"};
  const char* args[] = {"identifier", "metadataPrefix", "from", "until", "set",
                        "resumptionToken", "extra"};
  for (const char* v : verbs) {
    for (unsigned mask = 0; mask < 128; ++mask) {
      QueryParams q{{"verb", v}};
      for (unsigned i = 0; i < 7; ++i) {
        if (mask & (1u << i)) q.emplace_back(args[i], i == 2 ? "2004-01-01" : i == 3 ? "2004-02-01" : "x");
      }
      CHECK_MESSAGE(parse_code(q) == oai::expected_legality(q), build_query(q));
    }
  }
}

TEST_CASE("resumption tokens are sealed") {
  oai::TokenState s;
  s.verb = oai::Verb::kListIdentifiers;
  s.cursor = "1087927638:4";
  s.query = {"DIDL", kBase, kBase + 10, std::string("a\tb")};
  s.page_size = 25;
  s.delivered = 50;
  std::string token = oai::encode_token(s);
  auto back = oai::decode_token(token);
  CHECK(back.verb == s.verb);
  CHECK(back.cursor == s.cursor);
  CHECK(back.query.prefix == "DIDL");
  CHECK(back.query.from == kBase);
  CHECK(back.query.until == kBase + 10);
  CHECK(back.query.set == "a\tb");
  CHECK(back.page_size == 25);
  CHECK(back.delivered == 50);
  for (std::size_t i = 0; i < token.size(); ++i) {
    std::string t = token;
    t[i] = t[i] == 'x' ? 'y' : 'x';
    CHECK_THROWS_AS(oai::decode_token(t), oai::OaiError);
  }
  CHECK(oai::decode_set_token(oai::encode_set_token("BaseURL(3)")) == "BaseURL(3)");
}

TEST_CASE("autonomous repository passes the conformance suite") {
  Repo r;
  r.fill(60, 11);
  auto report = oai::check_conformance(r.source, {"DIDL"});
  for (const auto& f : report.failures) MESSAGE(f);
  CHECK(report.ok());
  CHECK(report.checks > 500);
}

// Faulty sources the conformance suite must reject.
class Faulty : public oai::RecordSource {
 public:
  enum Fault { kExclusiveUntil, kDropsLastPage, kWrongUnknownId };
  Faulty(const oai::RecordSource& inner, Fault fault) : inner_(inner), fault_(fault) {}
  oai::Identity identify() const override { return inner_.identify(); }
  std::vector<oai::MetadataFormat> formats(const std::optional<std::string>& id) const override {
    return inner_.formats(id);
  }
  std::vector<oai::SetInfo> sets() const override { return inner_.sets(); }
  oai::Record get(const std::string& id, const std::string& prefix) const override {
    if (fault_ == kWrongUnknownId && id.find("no-such") != std::string::npos)
      throw oai::OaiError(OaiErrc::kBadArgument, "wrong code");
    return inner_.get(id, prefix);
  }
  oai::ListPage list(const oai::ListQuery& q, const std::string& cursor, std::size_t limit,
                     bool headers_only) const override {
    oai::ListQuery query = q;
    if (fault_ == kExclusiveUntil && query.until) query.until = *query.until + -1;
    auto page = inner_.list(query, cursor, limit, headers_only);
    if (fault_ == kDropsLastPage && !cursor.empty() && !page.next_cursor) page.records.clear();
    return page;
  }

 private:
  const oai::RecordSource& inner_;
  Fault fault_;
};

TEST_CASE("conformance suite rejects faulty sources") {
  Repo r;
  r.fill(40, 13);
  for (auto fault : {Faulty::kExclusiveUntil, Faulty::kDropsLastPage, Faulty::kWrongUnknownId}) {
    Faulty f(r.source, fault);
    CHECK_FALSE(oai::check_conformance(f, {"DIDL"}).ok());
  }
}

TEST_CASE("GetRecord returns the stored document bytes") {
  Repo r;
  auto doc = didl::parse_didl(testing::fixture("reference_aip.xml"));
  r.tape->append(doc);
  std::string stored = r.tape->get(doc.package_id().base).didl_bytes;
  std::string body = oai::handle(r.source,
                                 {{"verb", "GetRecord"},
                                  {"identifier", doc.package_id().base},
                                  {"metadataPrefix", "DIDL"}},
                                 kBase);
  CHECK(body.find("<metadata>" + stored + "</metadata>") != std::string::npos);
  CHECK(error_in(oai::handle(r.source, {{"verb", "GetRecord"}, {"identifier", "info:none"},
                                        {"metadataPrefix", "DIDL"}}, kBase)) == "idDoesNotExist");
  CHECK(error_in(oai::handle(r.source, {{"verb", "GetRecord"}, {"identifier", doc.package_id().base},
                                        {"metadataPrefix", "oai_dc"}}, kBase)) ==
        "cannotDisseminateFormat");
}

TEST_CASE("1,000-record tape pages into 10 chained responses") {
  Repo r;
  r.fill(1000, 3);
  InProcessTransport net;
  net.route("repo:test", oai::make_handler(r.source, system_clock(), {100}));
  oai::Harvester h(net);
  oai::HarvestStats stats;
  auto records = h.harvest_all("repo:test", {"DIDL"}, &stats);
  CHECK(stats.pages == 10);
  REQUIRE(records.size() == 1000);
  auto scanned = tape::Tape::scan_records(r.tape->path());
  std::multiset<std::string> a, b;
  for (const auto& rec : records) a.insert(rec.header.identifier + "|" + rec.metadata);
  for (const auto& rec : scanned) b.insert(rec.package_id + "|" + rec.didl_bytes);
  CHECK(a == b);
  CHECK(stats.max_datestamp == r.tape->list(std::nullopt, std::nullopt).back().datestamp);
}

TEST_CASE("harvesting: small repo, incremental window, empty window") {
  Repo r;
  r.fill(3, 5, kBase, 0);
  InProcessTransport net;
  net.route("repo:test", oai::make_handler(r.source, system_clock(), {2}));
  oai::Harvester h(net);
  oai::HarvestStats first;
  CHECK(h.harvest_all("repo:test", {"DIDL"}, &first).size() == 3);
  r.fill(2, 6, *first.max_datestamp + 5, 1);
  auto fresh = h.harvest_all("repo:test", {"DIDL", *first.max_datestamp + 1});
  CHECK(fresh.size() == 2);
  CHECK(h.harvest_all("repo:test", {"DIDL", kBase + 100000}).empty());
  CHECK(h.identify("repo:test").base_url == "repo:test");
  CHECK(h.list_metadata_formats("repo:test").at(0).prefix == "DIDL");
  CHECK(h.list_sets("repo:test").empty());
  try {
    h.get_record("repo:test", "info:none", "DIDL");
    FAIL("unknown identifier accepted");
  } catch (const oai::ProtocolError& e) {
    CHECK(e.oai_errc() == OaiErrc::kIdDoesNotExist);
    CHECK(e.code() == Errc::kProtocolError);
  }
  try {
    h.harvest_all("repo:nowhere", {"DIDL"});
    FAIL("unroutable repository harvested");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kTransportFailure);
  }
}

TEST_CASE("HTTP binding carries the same responses") {
  Repo r;
  r.fill(12, 9);
  HttpServer server;
  server.route("/oai", oai::make_handler(r.source, system_clock(), {5}));
  int port = server.start("127.0.0.1", 0);
  HttpTransport http(5);
  oai::Harvester h(http);
  std::string base = "http://127.0.0.1:" + std::to_string(port) + "/oai";
  auto records = h.harvest_all(base, {"DIDL"});
  CHECK(records.size() == 12);
  CHECK(records.front().metadata == r.tape->read(r.tape->select({}, {}, {}, 1).at(0)).didl_bytes);
  CHECK_THROWS_AS(h.harvest_all("http://127.0.0.1:" + std::to_string(port) + "/missing", {"DIDL"}),
                  Error);
  server.stop();
}

}  // TEST_SUITE
