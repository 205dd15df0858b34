#include "adore/deployment.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <cstdio>

#include "adore/error.hpp"
#include "adore/harvest.hpp"
#include "adore/oai.hpp"

namespace adore::deploy {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  fs::path path(p);
  return path.is_relative() && !base_dir.empty() ? (fs::path(base_dir) / path).string() : p;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// Creates the layout under `root` and returns the index journal path.
std::string prepare_root(const std::string& root) {
  fs::create_directories(fs::path(root) / "tapes");
  return (fs::path(root) / "index.journal").string();
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& base_dir) {
  Config c;
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw Error(Errc::kBadManifest, "config must be a JSON object");
    read_opt(j, "namespace", c.namespace_prefix);
    read_opt(j, "root", c.root);
    c.root = resolve_path(c.root, base_dir);
    if (j.contains("dip_table"))
      c.dip_table = resolve_path(j.at("dip_table").get<std::string>(), base_dir);
    read_opt(j, "disabled_transforms", c.disabled_transforms);
    if (j.contains("binary_policy")) {
      std::string p = j.at("binary_policy").get<std::string>();
      if (p == "reference") {
        c.binary_policy = ingest::BinaryPolicy::kByReference;
      } else if (p == "inline") {
        c.binary_policy = ingest::BinaryPolicy::kInlineBase64;
      } else {
        throw Error(Errc::kBadManifest, "binary_policy must be reference or inline");
      }
    }
    if (j.contains("page_size")) {
      const json& p = j.at("page_size");
      read_opt(p, "repository", c.page_size.repository);
      read_opt(p, "index", c.page_size.index);
      read_opt(p, "federator", c.page_size.federator);
    }
    read_opt(j, "index_ttl_seconds", c.index_ttl_seconds);
    read_opt(j, "http_timeout_seconds", c.http_timeout_seconds);
    if (j.contains("endpoints")) {
      const json& e = j.at("endpoints");
      read_opt(e, "repositories", c.endpoints.repositories);
      read_opt(e, "index", c.endpoints.index);
      read_opt(e, "locator", c.endpoints.locator);
      read_opt(e, "federator", c.endpoints.federator);
      read_opt(e, "openurl", c.endpoints.openurl);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kBadManifest, std::string("config: ") + e.what());
  }
  if (c.namespace_prefix.empty() || c.namespace_prefix.back() != '/')
    throw Error(Errc::kBadManifest, "config: namespace must end in '/'");
  return c;
}

Config Config::load(const std::string& path) {
  return parse(read_file(path), fs::path(path).parent_path().string());
}

std::string Config::to_json() const {
  json j{{"namespace", namespace_prefix},
         {"root", root},
         {"disabled_transforms", disabled_transforms},
         {"binary_policy",
          binary_policy == ingest::BinaryPolicy::kByReference ? "reference" : "inline"},
         {"page_size",
          {{"repository", page_size.repository},
           {"index", page_size.index},
           {"federator", page_size.federator}}},
         {"index_ttl_seconds", index_ttl_seconds},
         {"http_timeout_seconds", http_timeout_seconds},
         {"endpoints",
          {{"repositories", endpoints.repositories},
           {"index", endpoints.index},
           {"locator", endpoints.locator},
           {"federator", endpoints.federator},
           {"openurl", endpoints.openurl}}}};
  if (dip_table) j["dip_table"] = *dip_table;
  return j.dump(2) + "\n";
}

Deployment::Deployment(Config config, LocalServices local, Clock clock)
    : config_(std::move(config)),
      local_services_(local),
      clock_(std::move(clock)),
      index_(index::RepositoryIndex::open(prepare_root(config_.root))),
      http_(config_.http_timeout_seconds) {
  arc::StoreOptions arc_options;
  arc_options.key_prefix = ingest_options().datastream_key_prefix();
  arc_ = arc::ArcStore::open((fs::path(config_.root) / "arc").string(), arc_options, clock_);
  index_source_ = std::make_unique<index::IndexRecordSource>(index_, config_.endpoints.index);
  locator_ = locator::Locator::open((fs::path(config_.root) / "locator").string());
  routing_ = std::make_unique<RoutingTransport>(local_, http_);
  if (local_services_.locator) {
    resolver_ = locator_.get();
  } else {
    remote_locator_ = std::make_unique<locator::RemoteLocator>(*routing_, config_.endpoints.locator);
    resolver_ = remote_locator_.get();
  }

  table_ = config_.dip_table ? dip::DipTable::load(*config_.dip_table)
                             : dip::deployment_table(config_.namespace_prefix);
  registry_ = dip::TransformRegistry::builtin();
  for (const auto& name : config_.disabled_transforms) {
    if (!registry_.remove(name))
      throw Error(Errc::kBadManifest, "config: no transform named " + name);
  }
  arc::ArcStore* store = arc_.get();
  engine_ = std::make_unique<dip::Engine>(registry_, table_, [store](const std::string& ref) {
    auto p = store->read(ref);
    return dip::Output{std::move(p.bytes), std::move(p.mime)};
  });

  fed::FederatorOptions fo;
  fo.base_url = config_.endpoints.federator;
  fo.index_base_url = config_.endpoints.index;
  fo.prefixes = fed::default_prefixes(config_.namespace_prefix);
  fo.index_ttl_seconds = config_.index_ttl_seconds;
  federator_ = std::make_unique<fed::Federator>(*routing_, *resolver_, *engine_, fo, clock_);
  openurl_ = std::make_unique<openurl::Resolver>(*routing_, *resolver_, *engine_);

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(tape_dir())) {
    if (entry.path().extension() == ".xml") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  for (const auto& n : names) open_tape(n, false);

  if (local_services_.index) local_.route(config_.endpoints.index, handler_for(config_.endpoints.index));
  if (local_services_.locator)
    local_.route(config_.endpoints.locator, handler_for(config_.endpoints.locator));
  if (local_services_.federator)
    local_.route(config_.endpoints.federator, handler_for(config_.endpoints.federator));
  if (local_services_.openurl)
    local_.route(config_.endpoints.openurl, handler_for(config_.endpoints.openurl));
}

Deployment::~Deployment() = default;

ingest::Options Deployment::ingest_options() const {
  ingest::Options o;
  o.namespace_prefix = config_.namespace_prefix;
  o.binary_policy = config_.binary_policy;
  return o;
}

std::string Deployment::tape_dir() const { return (fs::path(config_.root) / "tapes").string(); }

std::string Deployment::base_url_for(const std::string& tape_name) const {
  return config_.endpoints.repositories + tape_name;
}

void Deployment::open_tape(const std::string& name, bool create) {
  std::string path = (fs::path(tape_dir()) / (name + ".xml")).string();
  std::shared_ptr<tape::Tape> t = create ? tape::Tape::create(path) : tape::Tape::open(path);
  std::string base = base_url_for(name);
  auto entry = index_.find(base);
  auto repo = std::make_unique<repo::TapeRepository>(name, base, std::move(t),
                                                     entry ? entry->created : UtcTimestamp{});
  {
    std::lock_guard lock(tapes_mu_);
    repos_[base] = std::move(repo);
    tape_names_.push_back(name);
  }
  if (!local_services_.repositories) return;
  Handler h = handler_for(base);
  local_.route(base, h);
  std::vector<HttpServer*> servers;
  {
    std::lock_guard lock(tapes_mu_);
    servers = repo_servers_;
  }
  for (HttpServer* s : servers) s->route(parse_http_url(base).path, h);
}

repo::TapeRepository* Deployment::repository(const std::string& base_url) const {
  std::lock_guard lock(tapes_mu_);
  auto it = repos_.find(base_url);
  return it == repos_.end() ? nullptr : it->second.get();
}

std::vector<std::string> Deployment::tape_names() const {
  std::lock_guard lock(tapes_mu_);
  return tape_names_;
}

Handler Deployment::handler_for(const std::string& base_url) {
  const auto& e = config_.endpoints;
  if (base_url == e.index)
    return oai::make_handler(*index_source_, clock_, {config_.page_size.index});
  if (base_url == e.locator) return locator::make_locator_handler(*locator_);
  if (base_url == e.federator)
    return oai::make_handler(*federator_, clock_, {config_.page_size.federator});
  if (base_url == e.openurl) {
    return [this](const QueryParams& q) {
      return openurl::make_handler(*openurl_, openurl_log_)(q);
    };
  }
  repo::TapeRepository* r = repository(base_url);
  if (!r) throw Error(Errc::kInvalidArgument, "no local service at " + base_url);
  return oai::make_handler(*r, clock_, {config_.page_size.repository});
}

BatchReport Deployment::ingest_batch(const std::vector<ingest::ObjectManifest>& objects) {
  BatchReport report;
  std::size_t n = tape_names().size() + 1;
  char name[32];
  std::snprintf(name, sizeof name, "tape-%05zu", n);
  report.tape_name = name;
  report.base_url = base_url_for(name);
  // The index entry is never later than the tape's first record.
  index_.register_repository(report.base_url, report.tape_name, clock_);
  open_tape(report.tape_name, true);
  repo::TapeRepository* r = repository(report.base_url);
  ingest::Options options = ingest_options();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    try {
      auto doc = ingest::ingest_version(objects[i], arc_.get(), r->tape(), clock_, options);
      report.package_ids.push_back(doc.package_id().base);
    } catch (const Error& e) {
      report.failures.emplace_back("object " + std::to_string(i + 1), e.what());
    }
  }
  r->tape().seal();
  return report;
}

BatchReport Deployment::ingest_files(const std::vector<std::string>& paths) {
  std::vector<std::string> manifests;
  for (const auto& p : paths) {
    if (fs::path(p).extension() == ".batch") {
      auto listed = ingest::read_batch(p);
      manifests.insert(manifests.end(), listed.begin(), listed.end());
    } else {
      manifests.push_back(p);
    }
  }
  std::vector<ingest::ObjectManifest> objects;
  std::vector<std::pair<std::string, std::string>> failures;
  for (const auto& m : manifests) {
    try {
      objects.push_back(ingest::load_manifest(m));
    } catch (const Error& e) {
      failures.emplace_back(m, e.what());
    }
  }
  BatchReport report = ingest_batch(objects);
  report.failures.insert(report.failures.begin(), failures.begin(), failures.end());
  return report;
}

locator::PopulateStats Deployment::populate_locator() {
  oai::Harvester harvester(*routing_);
  return locator::populate_from_harvest(*locator_, harvester, config_.endpoints.index);
}

std::vector<std::string> Deployment::mount(HttpServer& server, const LocalServices& which) {
  std::vector<std::string> mounted;
  auto add = [&](const std::string& base) {
    server.route(parse_http_url(base).path, handler_for(base));
    mounted.push_back(base);
  };
  if (which.repositories) {
    std::vector<std::string> bases;
    {
      std::lock_guard lock(tapes_mu_);
      for (const auto& [base, _] : repos_) bases.push_back(base);
      repo_servers_.push_back(&server);
    }
    for (const auto& b : bases) add(b);
  }
  if (which.index) add(config_.endpoints.index);
  if (which.locator) add(config_.endpoints.locator);
  if (which.federator) add(config_.endpoints.federator);
  if (which.openurl) add(config_.endpoints.openurl);
  return mounted;
}

}  // namespace adore::deploy
