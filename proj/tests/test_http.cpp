#include "doctest.h"

#include <filesystem>
#include <set>

#include "adore/deployment.hpp"
#include "adore/harvest.hpp"
#include "adore/scenario.hpp"
#include "adore/xml.hpp"
#include "support.hpp"

using namespace adore;
namespace fs = std::filesystem;

namespace {

const std::string kNs = "info:lanl-repo/";

// Points every endpoint at `port` on the loopback interface.
deploy::Config config_on(const std::string& root, int port) {
  deploy::Config c;
  c.namespace_prefix = kNs;
  c.root = root;
  c.index_ttl_seconds = 0;
  c.http_timeout_seconds = 5;
  std::string host = "http://127.0.0.1:" + std::to_string(port);
  c.endpoints = {host + "/repo/", host + "/index", host + "/locator", host + "/oai",
                 host + "/openurl"};
  return c;
}

// A port nothing listens on: bound once, then released.
int closed_port() {
  HttpServer probe;
  int port = probe.start("127.0.0.1", 0);
  probe.stop();
  return port;
}

std::string oai_error(const std::string& body) {
  auto root = xml::parse(body);
  const xml::Element* e = root.first(oai::kOaiNs, "error");
  return e ? *e->attribute("code") : "";
}

std::set<std::tuple<std::string, std::string, std::string>> plan_set(
    const locator::PlanResolver& r, const std::vector<std::string>& ids) {
  std::set<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& id : ids)
    for (const auto& p : r.resolve(id))
      out.emplace(id + " " + p.repo_base_url.value_or("-"), p.package_id, p.xml_id.value_or(""));
  return out;
}

}  // namespace

TEST_SUITE("http") {

TEST_CASE("walkthrough requests over HTTP") {
  testing::TempDir dir;
  HttpServer server;
  int port = server.start("127.0.0.1", 0);
  deploy::Deployment d(config_on(dir.str("store"), port));
  d.mount(server, deploy::LocalServices::all());
  auto report = d.ingest_files({testing::fixture_path("sample.manifest")});
  REQUIRE(report.ok());
  REQUIRE(d.populate_locator().failures.empty());

  HttpTransport http(5);
  const auto& ep = d.config().endpoints;
  auto identify = http.get(ep.federator, {{"verb", "Identify"}});
  CHECK(identify.status == 200);
  CHECK(identify.body.find("<baseURL>" + ep.federator + "</baseURL>") != std::string::npos);

  locator::RemoteLocator remote(http, ep.locator);
  CHECK(remote.resolve("info:pmid/2225887") == d.locator().resolve("info:pmid/2225887"));
  CHECK(remote.resolve(report.package_ids[0]).front().repo_base_url == report.base_url);

  oai::Harvester h(http);
  auto direct = h.harvest_all(report.base_url, {"DIDL"});
  auto federated = h.harvest_all(ep.federator, {"DIDL"});
  REQUIRE(direct.size() == 1);
  REQUIRE(federated.size() == 1);
  CHECK(direct[0].metadata == federated[0].metadata);

  auto mods = http.get(ep.openurl, {{"url_ver", "Z39.88-2004"},
                                    {"rft_id", "info:pmid/2225887"},
                                    {"svc_id", kNs + "service/marc_2_mods"}});
  CHECK(mods.status == 200);
  CHECK(mods.content_type.starts_with("application/mods+xml"));
  auto missing = http.get(ep.openurl, {{"url_ver", "Z39.88-2004"}, {"rft_id", "info:x/none"}});
  CHECK(missing.status == 404);
  CHECK(http.get("http://127.0.0.1:" + std::to_string(port) + "/nothing", {}).status == 404);
}

TEST_CASE("a federator without its locator answers 503") {
  testing::TempDir dir;
  HttpServer server;
  int port = server.start("127.0.0.1", 0);
  auto cfg = config_on(dir.str("store"), port);
  cfg.endpoints.locator = "http://127.0.0.1:" + std::to_string(closed_port()) + "/locator";
  deploy::LocalServices partial = deploy::LocalServices::none();
  partial.repositories = partial.index = partial.federator = true;
  deploy::Deployment d(cfg, partial);
  d.mount(server, partial);
  auto report = d.ingest_files({testing::fixture_path("sample.manifest")});
  REQUIRE(report.ok());

  HttpTransport http(5);
  auto res = http.get(cfg.endpoints.federator, {{"verb", "GetRecord"},
                                                {"identifier", report.package_ids[0]},
                                                {"metadataPrefix", "DIDL"}});
  CHECK(res.status == 503);
  // Listing does not involve the locator.
  auto list = http.get(cfg.endpoints.federator, {{"verb", "ListIdentifiers"},
                                                 {"metadataPrefix", "DIDL"}});
  CHECK(list.status == 200);
  CHECK(oai_error(list.body).empty());
}

TEST_CASE("a 404 from a host without a locator is an outage, not a miss") {
  testing::TempDir dir;
  HttpServer server;
  int port = server.start("127.0.0.1", 0);
  auto cfg = config_on(dir.str("store"), port);
  deploy::LocalServices partial = deploy::LocalServices::none();
  partial.repositories = partial.index = partial.federator = true;
  deploy::Deployment d(cfg, partial);
  d.mount(server, partial);
  auto report = d.ingest_files({testing::fixture_path("sample.manifest")});
  REQUIRE(report.ok());

  HttpTransport http(5);
  auto res = http.get(cfg.endpoints.federator, {{"verb", "GetRecord"},
                                                {"identifier", report.package_ids[0]},
                                                {"metadataPrefix", "DIDL"}});
  CHECK(res.status == 503);
  CHECK(oai_error(http.get(cfg.endpoints.federator, {{"verb", "Identify"}}).body).empty());
}

TEST_CASE("a rebuilt locator resolves exactly like the original") {
  testing::TempDir dir;
  std::string root = dir.str("store");
  auto cfg = config_on(root, closed_port());
  std::vector<std::string> ids;
  std::set<std::tuple<std::string, std::string, std::string>> before;
  {
    deploy::Deployment d(cfg);
    for (std::size_t b = 0; b < 3; ++b) {
      std::vector<ingest::ObjectManifest> batch;
      for (std::size_t i = 0; i < 10; ++i)
        batch.push_back(scenario::synthetic_object(3, b * 10 + i, kNs));
      REQUIRE(d.ingest_batch(batch).ok());
    }
    REQUIRE(d.populate_locator().failures.empty());
    for (const auto& p : d.locator().packages()) ids.push_back(p.package_id);
    for (const auto& c : d.locator().contents()) {
      ids.push_back(c.content_id);
      ids.push_back(c.package_id + "#" + c.xml_id);
    }
    before = plan_set(d.locator(), ids);
  }
  REQUIRE(ids.size() > 60);
  fs::remove_all(fs::path(root) / "locator");
  deploy::Deployment rebuilt(cfg);
  CHECK(rebuilt.locator().package_count() == 0);
  REQUIRE(rebuilt.populate_locator().failures.empty());
  CHECK(plan_set(rebuilt.locator(), ids) == before);
}

}  // TEST_SUITE
