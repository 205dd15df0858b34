#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adore/arc.hpp"
#include "adore/dip.hpp"
#include "adore/federator.hpp"
#include "adore/ingest.hpp"
#include "adore/locator.hpp"
#include "adore/openurl.hpp"
#include "adore/repo_index.hpp"
#include "adore/repository.hpp"
#include "adore/tape.hpp"
#include "adore/transport.hpp"

// One deployment: the stores under a root directory, the services over them
// and the base URLs that connect them.
//
// Config file (JSON); relative paths are taken from the file's directory and
// every key is optional:
//
//   {
//     "namespace": "info:lanl-repo/",
//     "root": "store",
//     "dip_table": "dip_table.tsv",
//     "disabled_transforms": ["format_crosswalk"],
//     "binary_policy": "reference",
//     "page_size": {"repository": 100, "index": 100, "federator": 100},
//     "index_ttl_seconds": 10,
//     "http_timeout_seconds": 30,
//     "endpoints": {
//       "repositories": "http://127.0.0.1:8080/repo/",
//       "index": "http://127.0.0.1:8080/index",
//       "locator": "http://127.0.0.1:8080/locator",
//       "federator": "http://127.0.0.1:8080/oai",
//       "openurl": "http://127.0.0.1:8080/openurl"
//     }
//   }
//
// Without `dip_table` the built-in deployment table for the namespace is
// used. A repository's base URL is the `repositories` prefix followed by its
// tape name.
namespace adore::deploy {

struct Endpoints {
  std::string repositories = "http://127.0.0.1:8080/repo/";
  std::string index = "http://127.0.0.1:8080/index";
  std::string locator = "http://127.0.0.1:8080/locator";
  std::string federator = "http://127.0.0.1:8080/oai";
  std::string openurl = "http://127.0.0.1:8080/openurl";
};

struct PageSizes {
  std::size_t repository = 100;
  std::size_t index = 100;
  std::size_t federator = 100;
};

struct Config {
  std::string namespace_prefix = "info:local-repo/";
  std::string root = "store";
  std::optional<std::string> dip_table;
  std::vector<std::string> disabled_transforms;
  ingest::BinaryPolicy binary_policy = ingest::BinaryPolicy::kByReference;
  PageSizes page_size;
  std::int64_t index_ttl_seconds = 10;
  int http_timeout_seconds = 30;
  Endpoints endpoints;

  // Throws Error(kBadManifest) for malformed JSON or wrong value types.
  static Config parse(std::string_view json, const std::string& base_dir);
  static Config load(const std::string& path);
  std::string to_json() const;
};

// Which services run in this process. The others are reached through
// their endpoints.
struct LocalServices {
  bool repositories = true;
  bool index = true;
  bool locator = true;
  bool federator = true;
  bool openurl = true;
  static LocalServices all() { return {}; }
  static LocalServices none() { return {false, false, false, false, false}; }
};

struct BatchReport {
  std::string tape_name;
  std::string base_url;
  std::vector<std::string> package_ids;
  // Manifest (or position) and reason.
  std::vector<std::pair<std::string, std::string>> failures;
  bool ok() const { return failures.empty(); }
};

class Deployment {
 public:
  // Creates the root layout when missing and opens every store.
  explicit Deployment(Config config, LocalServices local = LocalServices::all(),
                      Clock clock = system_clock());
  ~Deployment();
  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  const Config& config() const { return config_; }
  ingest::Options ingest_options() const;

  // One new tape per batch: every object is appended, the tape is sealed
  // and registered in the index even when empty or partly failed.
  BatchReport ingest_batch(const std::vector<ingest::ObjectManifest>& objects);
  // Manifest paths, or a batch file when `paths` holds one `.batch` file.
  BatchReport ingest_files(const std::vector<std::string>& paths);

  // Harvest-populates the locator through the index endpoint.
  locator::PopulateStats populate_locator();

  std::vector<std::string> tape_names() const;
  std::string base_url_for(const std::string& tape_name) const;
  repo::TapeRepository* repository(const std::string& base_url) const;

  arc::ArcStore& arc() { return *arc_; }
  index::RepositoryIndex& index() { return index_; }
  locator::Locator& locator() { return *locator_; }
  const locator::PlanResolver& plan_resolver() const { return *resolver_; }
  const dip::DipTable& dip_table() const { return table_; }
  const dip::TransformRegistry& registry() const { return registry_; }
  const dip::Engine& engine() const { return *engine_; }
  fed::Federator& federator() { return *federator_; }
  openurl::Resolver& openurl() { return *openurl_; }

  // In-process routes for the local services; everything else goes over
  // HTTP.
  InProcessTransport& local_transport() { return local_; }
  Transport& transport() { return *routing_; }

  // Registers the local services on `server` by the paths of their
  // endpoints. Returns the mounted base URLs. With `which.repositories`,
  // tapes created later are mounted too, so `server` must outlive this.
  std::vector<std::string> mount(HttpServer& server, const LocalServices& which);

  void set_openurl_log(openurl::LogSink sink) { openurl_log_ = std::move(sink); }

 private:
  void open_tape(const std::string& name, bool create);
  Handler handler_for(const std::string& base_url);
  std::string tape_dir() const;

  Config config_;
  LocalServices local_services_;
  Clock clock_;
  std::unique_ptr<arc::ArcStore> arc_;
  index::RepositoryIndex index_;
  std::unique_ptr<index::IndexRecordSource> index_source_;
  std::unique_ptr<locator::Locator> locator_;
  std::unique_ptr<locator::RemoteLocator> remote_locator_;
  const locator::PlanResolver* resolver_ = nullptr;
  std::vector<HttpServer*> repo_servers_;  // guarded by tapes_mu_
  dip::DipTable table_;
  dip::TransformRegistry registry_;
  std::unique_ptr<dip::Engine> engine_;
  InProcessTransport local_;
  HttpTransport http_;
  std::unique_ptr<RoutingTransport> routing_;
  std::unique_ptr<fed::Federator> federator_;
  std::unique_ptr<openurl::Resolver> openurl_;
  openurl::LogSink openurl_log_;
  mutable std::mutex tapes_mu_;
  std::map<std::string, std::unique_ptr<repo::TapeRepository>> repos_;  // by base URL
  std::vector<std::string> tape_names_;
};

}  // namespace adore::deploy
