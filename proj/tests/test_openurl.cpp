#include "doctest.h"

#include <json.hpp>

#include "adore/deployment.hpp"
#include "adore/openurl.hpp"
#include "support.hpp"

using namespace adore;

namespace {

const UtcTimestamp kBase = UtcTimestamp::from_civil(2004, 6, 22, 18, 7, 18);
const std::string kNs = "info:lanl-repo/";
const std::string kMods = "info:lanl-repo/service/marc_2_mods";
const std::string kToc = "info:lanl-repo/service/table_of_contents";

deploy::Config config(const testing::TempDir& dir) {
  deploy::Config c;
  c.namespace_prefix = kNs;
  c.root = dir.str("store");
  return c;
}

struct Site {
  testing::TempDir dir;
  SteppingClock clock{kBase, 1};
  deploy::Deployment d{config(dir), deploy::LocalServices::all(), [this] { return clock(); }};
  std::vector<std::string> log;
  std::string pkg;

  Site() {
    d.set_openurl_log([this](const std::string& line) { log.push_back(line); });
    auto report = d.ingest_files({testing::fixture_path("sample.manifest")});
    REQUIRE(report.ok());
    pkg = report.package_ids.at(0);
    REQUIRE(d.populate_locator().failures.empty());
  }

  didl::DidlDocument stored(const std::string& id) {
    auto plan = d.locator().resolve(id).front();
    return didl::parse_didl(d.repository(*plan.repo_base_url)->tape().get(plan.package_id).didl_bytes);
  }

  std::string pdf_component() {
    auto doc = stored(pkg);
    for (auto e : didl::entities(doc)) {
      auto c = std::get_if<const didl::Component*>(&e);
      if (c && (*c)->resources.front().mime_type == "application/pdf") return (*c)->xml_id;
    }
    FAIL("no PDF component");
    return {};
  }

  Response get(const QueryParams& q) {
    return d.transport().get(d.config().endpoints.openurl, q);
  }
};

QueryParams kev(const std::string& rft, const std::optional<std::string>& svc = {}) {
  QueryParams q{{"url_ver", "Z39.88-2004"}, {"rft_id", rft}};
  if (svc) q.emplace_back("svc_id", *svc);
  return q;
}

}  // namespace

TEST_SUITE("openurl") {

TEST_CASE("KEV parsing") {
  auto ctx = openurl::parse_kev(
      "url_ver=Z39.88-2004&rft_id=info:doi/10.123/44455&svc_id=info:lanl-repo/service/"
      "table_of_contents");
  CHECK(ctx.referent_id == "info:doi/10.123/44455");
  CHECK(ctx.service_type_id == kToc);

  auto pdf = openurl::parse_kev(
      "url_ver=Z39.88-2004&rft_id=info%3Alanl-repo%2Fi%2F58f202ac%23uuid-00004a42");
  CHECK(pdf.referent_id == "info:lanl-repo/i/58f202ac#uuid-00004a42");
  CHECK_FALSE(pdf.service_type_id);

  auto extra = openurl::parse_kev(
      "url_ver=Z39.88-2004&rft_id=x:y&req_id=mailto:a@b&rfr_id=info:sid/z&ctx_enc=utf-8");
  CHECK(extra.requester_id == "mailto:a@b");
  CHECK(extra.referrer_id == "info:sid/z");
  CHECK(extra.extra == QueryParams{{"ctx_enc", "utf-8"}});
  CHECK(openurl::parse_kev(openurl::format_kev(extra)).extra == extra.extra);

  auto code = [](std::string_view q) {
    try {
      openurl::parse_kev(q);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::kInvalidArgument;
  };
  CHECK(code("url_ver=Z39.88-2004&svc_id=x:y") == Errc::kMissingReferent);
  CHECK(code("url_ver=Z39.88-2004&rft_id=") == Errc::kMissingReferent);
  CHECK(code("rft_id=x:y") == Errc::kUnsupportedVersion);
  CHECK(code("url_ver=Z39.88-2003&rft_id=x:y") == Errc::kUnsupportedVersion);
}

TEST_CASE("the MODS request runs every pipeline step") {
  Site s;
  std::vector<openurl::Step> steps;
  auto out = s.d.openurl().resolve(openurl::parse_kev(kev("info:pmid/2225887", kMods)),
                                   [&](const openurl::TraceEvent& e) { steps.push_back(e.step); });
  using openurl::Step;
  CHECK(steps == std::vector<Step>{Step::kResolve, Step::kFetch, Step::kComplete, Step::kApply,
                                   Step::kRespond});
  CHECK(out.mime_type == "application/mods+xml");
  auto mods = xml::parse(out.bytes);
  CHECK(mods.ns == dip::kModsNs);
  const xml::Element* title = mods.first(dip::kModsNs, "titleInfo");
  REQUIRE(title);
  CHECK(title->first(dip::kModsNs, "title")->text() == "Sample scholarly paper");

  auto res = s.get(kev("info:pmid/2225887", kMods));
  CHECK(res.status == 200);
  CHECK(res.content_type == "application/mods+xml");
  CHECK(res.body == out.bytes);
  REQUIRE(s.log.size() == 1);
  auto entry = nlohmann::json::parse(s.log[0]);
  CHECK(entry["status"] == 200);
  REQUIRE(entry["steps"].size() == 5);
  CHECK(entry["steps"][0]["step"] == "resolve");
  CHECK(entry["steps"][4]["step"] == "respond");
}

TEST_CASE("raw PDF dissemination returns the ingested bytes") {
  Site s;
  auto res = s.get(kev(s.pkg + "#" + s.pdf_component()));
  CHECK(res.status == 200);
  CHECK(res.content_type == "application/pdf");
  CHECK(res.body == testing::fixture("paper.pdf"));
}

TEST_CASE("content and package addresses give identical responses") {
  Site s;
  auto doc = s.stored(s.pkg);
  for (const auto& ref : didl::extract_identifiers(doc)) {
    for (const auto& svc : {std::optional<std::string>(), std::optional<std::string>(kMods),
                            std::optional<std::string>(kToc)}) {
      auto by_content = s.get(kev(ref.content_id.uri, svc));
      auto by_package = s.get(kev(s.pkg + "#" + ref.xml_id, svc));
      CHECK(by_content.status == by_package.status);
      CHECK(by_content.content_type == by_package.content_type);
      CHECK(by_content.body == by_package.body);
    }
  }
}

TEST_CASE("failure classes map to statuses") {
  Site s;
  // The object-level Item has no MARCXML Component of its own.
  auto top = s.get(kev("info:doi/10.123/44455", kMods));
  CHECK(top.status == 400);
  CHECK(top.body.starts_with("ServiceNotApplicable"));
  CHECK(s.get(kev("info:doi/10.123/44455", kNs + "service/none")).status == 400);
  CHECK(s.get(kev("info:doi/10.123/missing")).status == 404);
  CHECK(s.get({{"url_ver", "Z39.88-2004"}}).status == 400);
  CHECK(s.get({{"rft_id", "info:doi/10.123/44455"}}).status == 400);
  auto toc = s.get(kev("info:doi/10.123/44455", kToc));
  CHECK(toc.status == 200);
  CHECK(toc.content_type == "application/xhtml+xml");

  s.d.local_transport().unroute(s.d.base_url_for(s.d.tape_names()[0]));
  auto down = s.get(kev("info:doi/10.123/44455", kToc));
  CHECK(down.status == 502);
}

TEST_CASE("versions resolve newest first and the resolver writes nothing") {
  Site s;
  auto second = s.d.ingest_files({testing::fixture_path("sample.manifest")});
  REQUIRE(second.ok());
  REQUIRE(s.d.populate_locator().failures.empty());

  auto listing = nlohmann::json::parse(
      s.get({{"url_ver", "Z39.88-2004"}, {"rft_id", "info:pmid/2225887"}, {"adore_versions", "1"}})
          .body);
  REQUIRE(listing["plans"].size() == 2);
  CHECK(listing["plans"][0]["package_id"] == second.package_ids[0]);
  CHECK(listing["plans"][1]["package_id"] == s.pkg);

  auto rows = s.d.locator().contents().size();
  auto arc_records = s.d.arc().size();
  std::vector<std::string> tapes;
  for (const auto& name : s.d.tape_names())
    tapes.push_back(read_file(s.d.repository(s.d.base_url_for(name))->tape().path()));

  std::string detail;
  s.d.openurl().resolve(openurl::parse_kev(kev("info:pmid/2225887", kMods)),
                        [&](const openurl::TraceEvent& e) {
                          if (e.step == openurl::Step::kResolve) detail = e.detail;
                        });
  CHECK(detail.starts_with(second.package_ids[0] + "#"));
  for (int i = 0; i < 5; ++i) s.get(kev("info:doi/10.123/44455", kToc));

  CHECK(s.d.locator().contents().size() == rows);
  CHECK(s.d.arc().size() == arc_records);
  for (std::size_t i = 0; i < tapes.size(); ++i)
    CHECK(read_file(s.d.repository(s.d.base_url_for(s.d.tape_names()[i]))->tape().path()) ==
          tapes[i]);
}

}  // TEST_SUITE
