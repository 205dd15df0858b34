// Operator command line for a deployment. Exit codes: 0 success, 1 the
// operation failed (in whole or in part), 2 usage or configuration error.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>

#include "adore/deployment.hpp"
#include "adore/error.hpp"
#include "adore/harvest.hpp"
#include "adore/scenario.hpp"
#include "adore/tape.hpp"
#include "adore/xml.hpp"

using namespace adore;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> stop_requested{false};

void on_signal(int) { stop_requested = true; }

std::string or_dash(const std::optional<std::string>& v) { return v ? *v : "-"; }

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

deploy::LocalServices parse_services(const std::vector<std::string>& names) {
  if (names.empty()) return deploy::LocalServices::all();
  auto s = deploy::LocalServices::none();
  for (const auto& n : names) {
    if (n == "repositories") s.repositories = true;
    else if (n == "index") s.index = true;
    else if (n == "locator") s.locator = true;
    else if (n == "federator") s.federator = true;
    else if (n == "openurl") s.openurl = true;
    else throw Usage("unknown service " + n);
  }
  return s;
}

std::string oai_error_code(const std::string& body) {
  try {
    auto root = xml::parse(body);
    if (const xml::Element* e = root.first(oai::kOaiNs, "error")) {
      const std::string* code = e->attribute("code");
      return code ? *code : "error";
    }
  } catch (const Error&) {
    return "malformed";
  }
  return {};
}

int cmd_init(const std::string& path, const std::string& ns, const std::string& root,
             int port, bool force) {
  if (fs::exists(path) && !force) {
    std::cerr << path << " exists; pass --force to overwrite\n";
    return 1;
  }
  deploy::Config c;
  c.namespace_prefix = ns;
  c.root = root;
  std::string base = "http://127.0.0.1:" + std::to_string(port);
  c.endpoints = {base + "/repo/", base + "/index", base + "/locator", base + "/oai",
                 base + "/openurl"};
  // Validates the namespace.
  deploy::Config::parse(c.to_json(), "");
  write_file(path, c.to_json());
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_ingest(deploy::Deployment& d, const std::vector<std::string>& files) {
  auto report = d.ingest_files(files);
  for (const auto& id : report.package_ids) std::cout << id << "\n";
  std::cerr << report.tape_name << " at " << report.base_url << ": "
            << report.package_ids.size() << " packages, " << report.failures.size()
            << " failures\n";
  for (const auto& [what, why] : report.failures) std::cerr << "  " << what << ": " << why << "\n";
  return report.ok() ? 0 : 1;
}

int cmd_serve(const deploy::Config& config, const deploy::LocalServices& which, double duration) {
  deploy::Deployment d(config, which);
  d.set_openurl_log([](const std::string& line) { std::cerr << line << "\n"; });
  const auto& e = config.endpoints;
  // One server per distinct host:port.
  std::map<std::pair<std::string, int>, deploy::LocalServices> groups;
  auto place = [&](bool on, const std::string& url, bool deploy::LocalServices::*member) {
    if (!on) return;
    UrlParts u = parse_http_url(url);
    auto [it, fresh] = groups.try_emplace({u.host, u.port}, deploy::LocalServices::none());
    it->second.*member = true;
  };
  place(which.repositories, e.repositories, &deploy::LocalServices::repositories);
  place(which.index, e.index, &deploy::LocalServices::index);
  place(which.locator, e.locator, &deploy::LocalServices::locator);
  place(which.federator, e.federator, &deploy::LocalServices::federator);
  place(which.openurl, e.openurl, &deploy::LocalServices::openurl);

  std::vector<std::unique_ptr<HttpServer>> servers;
  for (const auto& [addr, mask] : groups) {
    auto server = std::make_unique<HttpServer>();
    for (const auto& base : d.mount(*server, mask)) std::cerr << "serving " << base << "\n";
    server->start(addr.first, addr.second);
    servers.push_back(std::move(server));
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration);
  while (!stop_requested && (duration <= 0 || std::chrono::steady_clock::now() < until))
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  for (auto& s : servers) s->stop();
  return 0;
}

int cmd_harvest(Transport& t, const std::string& base, const oai::HarvestOptions& opts,
                const std::string& out_dir) {
  oai::Harvester h(t);
  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::size_t n = 0;
  auto stats = h.harvest(base, opts, [&](const oai::Record& r) {
    ++n;
    std::cout << r.header.identifier << "\t" << r.header.datestamp.iso8601() << "\n";
    if (!out_dir.empty() && !opts.headers_only) {
      char name[32];
      std::snprintf(name, sizeof name, "%06zu.xml", n);
      write_file((fs::path(out_dir) / name).string(), r.metadata);
    }
  });
  std::cerr << "records " << stats.records << " pages " << stats.pages;
  if (stats.max_datestamp) std::cerr << " max_datestamp " << stats.max_datestamp->iso8601();
  std::cerr << "\n";
  return 0;
}

int cmd_locate(const locator::PlanResolver& r, const std::string& id) {
  try {
    for (const auto& p : r.resolve(id))
      std::cout << p.package_id << "\t" << or_dash(p.repo_base_url) << "\t" << or_dash(p.xml_id)
                << "\n";
    return 0;
  } catch (const Error& e) {
    if (e.code() != Errc::kNotFound) throw;
    std::cerr << "not found: " << id << "\n";
    return 1;
  }
}

int cmd_dip_table(dip::DipTable table, const std::optional<std::string>& path,
                  const std::vector<std::string>& args) {
  if (args.empty() || args[0] == "list") {
    for (const auto& e : table.entries())
      std::cout << e.service_id << "\t" << e.placeholder_value << "\t" << e.transform_ref << "\t"
                << e.description << "\n";
    return 0;
  }
  if (!path) throw Usage("add/remove need --table");
  if (args[0] == "add") {
    if (args.size() < 4 || args.size() > 5)
      throw Usage("dip-table add SERVICE PLACEHOLDER POINTER [DESCRIPTION]");
    table.add({args[1], args[2], args[3], args.size() == 5 ? args[4] : ""});
  } else if (args[0] == "remove") {
    if (args.size() != 3) throw Usage("dip-table remove SERVICE PLACEHOLDER");
    if (!table.remove(args[1], args[2])) {
      std::cerr << "no such row\n";
      return 1;
    }
  } else {
    throw Usage("dip-table list|add|remove");
  }
  table.save(*path);
  std::cout << table.entries().size() << " rows\n";
  return 0;
}

int cmd_inspect_tape(const std::string& path, bool verify) {
  auto tape = tape::Tape::open(path);
  auto entries = tape->entries();
  std::cout << "records " << entries.size() << "\n"
            << "sealed " << (tape->sealed() ? "yes" : "no") << "\n"
            << "bytes " << fs::file_size(path) << "\n";
  if (auto t = tape->earliest()) std::cout << "earliest " << t->iso8601() << "\n";
  std::optional<UtcTimestamp> latest;
  for (const auto& e : entries)
    if (!latest || *latest < e.datestamp) latest = e.datestamp;
  if (latest) std::cout << "latest " << latest->iso8601() << "\n";
  if (!verify) return 0;
  auto scanned = tape::Tape::scan_records(path);
  bool ok = scanned.size() == entries.size();
  for (std::size_t i = 0; ok && i < entries.size(); ++i) {
    auto r = tape->read(entries[i]);
    ok = r.package_id == scanned[i].package_id && r.didl_bytes == scanned[i].didl_bytes &&
         r.datestamp == scanned[i].datestamp;
  }
  if (ok && tape->sealed()) xml::parse(read_file(path));
  std::cout << "verify " << (ok ? "ok" : "MISMATCH") << "\n";
  return ok ? 0 : 1;
}

int cmd_openurl(deploy::Deployment& d, const std::string& query, const std::string& out,
                bool trace) {
  if (trace) d.set_openurl_log([](const std::string& line) { std::cerr << line << "\n"; });
  auto res = d.transport().get(d.config().endpoints.openurl, parse_query(query));
  std::cerr << "status " << res.status << " " << res.content_type << " " << res.body.size()
            << " bytes\n";
  if (out.empty()) {
    std::cout << res.body;
  } else {
    write_file(out, res.body);
  }
  return res.status == 200 ? 0 : 1;
}

int cmd_oai(Transport& t, const std::string& base, const std::vector<std::string>& args) {
  QueryParams q;
  for (const auto& a : args) {
    auto part = parse_query(a);
    q.insert(q.end(), part.begin(), part.end());
  }
  auto res = t.get(base, q);
  std::cout << res.body;
  if (res.status != 200) {
    std::cerr << "status " << res.status << "\n";
    return 1;
  }
  std::string code = oai_error_code(res.body);
  if (!code.empty()) {
    std::cerr << "error " << code << "\n";
    return 1;
  }
  return 0;
}

int cmd_transforms(const dip::TransformRegistry& r) {
  for (const auto& t : r.list())
    std::cout << t.name << "\t" << t.input << "\t" << t.mime_type << "\t" << t.description << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aDORe repository operator tool"};
  app.require_subcommand(1);
  std::string config_path = "adore.json";
  app.add_option("-c,--config", config_path, "Deployment config file")->capture_default_str();

  auto* init = app.add_subcommand("init", "Write a config file");
  std::string ns = "info:local-repo/", root = "store";
  int port = 8080;
  bool force = false;
  init->add_option("--namespace", ns, "Deployment namespace, ending in '/'")->capture_default_str();
  init->add_option("--root", root, "Store directory, relative to the config")->capture_default_str();
  init->add_option("--port", port, "Port for every endpoint")->capture_default_str();
  init->add_flag("--force", force, "Overwrite an existing file");

  auto* ingest = app.add_subcommand("ingest", "Ingest manifests (or .batch files) as one new tape");
  std::vector<std::string> files;
  ingest->add_option("files", files, "Manifest or batch files")->required();

  auto* serve = app.add_subcommand("serve", "Serve endpoints over HTTP");
  std::vector<std::string> only;
  double duration = 0;
  serve->add_option("--only", only,
                    "Subset of repositories, index, locator, federator, openurl")
      ->delimiter(',');
  serve->add_option("--duration", duration, "Stop after this many seconds (0: until signalled)");

  auto* harvest = app.add_subcommand("harvest", "Harvest an OAI-PMH endpoint");
  std::string base;
  oai::HarvestOptions hopts;
  std::string from, until, out_dir;
  std::optional<std::string> set;
  harvest->add_option("--base", base, "Base URL")->required();
  harvest->add_option("--prefix", hopts.prefix, "metadataPrefix")->required();
  harvest->add_option("--from", from, "Inclusive lower datestamp");
  harvest->add_option("--until", until, "Inclusive upper datestamp");
  harvest->add_option("--set", set, "setSpec");
  harvest->add_flag("--headers", hopts.headers_only, "ListIdentifiers instead of ListRecords");
  harvest->add_option("--out", out_dir, "Directory for one file per record");

  auto* locate = app.add_subcommand("locate", "Resolve an identifier through the locator");
  std::string id;
  std::string remote;
  locate->add_option("id", id, "Package or content identifier")->required();
  locate->add_option("--remote", remote, "Locator endpoint instead of the local tables");

  auto* populate = app.add_subcommand("locator-populate", "Populate the locator by harvesting");
  auto* load = app.add_subcommand("locator-load", "Load locator rows from a batch file");
  std::string rows_file;
  load->add_option("file", rows_file, "Row batch file")->required();

  auto* dipt = app.add_subcommand("dip-table", "List or edit a DIP Table file");
  std::optional<std::string> table_path;
  std::vector<std::string> dip_args;
  dipt->add_option("--table", table_path, "DIP Table file (default: the deployment's)");
  dipt->add_option("args", dip_args, "list | add SERVICE PLACEHOLDER POINTER [DESC] | remove SERVICE PLACEHOLDER");

  auto* inspect = app.add_subcommand("inspect-tape", "Print tape statistics");
  std::string tape_path;
  bool verify = false;
  inspect->add_option("path", tape_path, "Tape file")->required();
  inspect->add_flag("--verify", verify, "Compare indexed reads with a streamed scan");

  auto* ourl = app.add_subcommand("openurl", "Resolve a KEV ContextObject");
  std::string kev, out_file;
  bool trace = false;
  ourl->add_option("query", kev, "KEV query string")->required();
  ourl->add_option("--out", out_file, "Write the body here instead of stdout");
  ourl->add_flag("--trace", trace, "Print the pipeline log line");

  auto* oai_cmd = app.add_subcommand("oai", "Send one OAI-PMH request");
  std::string oai_base;
  std::vector<std::string> oai_args;
  oai_cmd->add_option("--base", oai_base, "Base URL (default: the federator)");
  oai_cmd->add_option("args", oai_args, "key=value arguments")->required();

  auto* transforms = app.add_subcommand("transforms", "List registered transforms");

  auto* scen = app.add_subcommand("scenario", "Run the desk-scale load scenario");
  scenario::Options sopts;
  scen->add_option("--objects", sopts.objects)->capture_default_str();
  scen->add_option("--batch-size", sopts.batch_size)->capture_default_str();
  scen->add_option("--resolves", sopts.resolves)->capture_default_str();
  scen->add_option("--seed", sopts.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*init) return cmd_init(config_path, ns, root, port, force);
    if (*inspect) return cmd_inspect_tape(tape_path, verify);

    deploy::Config config;
    try {
      config = deploy::Config::load(config_path);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return 2;
    }
    if (*serve) return cmd_serve(config, parse_services(only), duration);
    if (*dipt && table_path && fs::exists(*table_path))
      return cmd_dip_table(dip::DipTable::load(*table_path), table_path, dip_args);
    if (*dipt && table_path) return cmd_dip_table(dip::DipTable{}, table_path, dip_args);

    deploy::Deployment d(config);
    if (*dipt) return cmd_dip_table(d.dip_table(), std::nullopt, dip_args);
    if (*ingest) return cmd_ingest(d, files);
    if (*harvest) {
      auto date = [](const std::string& text, bool upper) {
        bool day = false;
        auto t = UtcTimestamp::parse_oai_date(text, &day);
        if (!t) throw Usage("bad date " + text);
        return upper && day ? *t + 86399 : *t;
      };
      if (!from.empty()) hopts.from = date(from, false);
      if (!until.empty()) hopts.until = date(until, true);
      hopts.set = set;
      return cmd_harvest(d.transport(), base, hopts, out_dir);
    }
    if (*locate) {
      if (remote.empty()) return cmd_locate(d.plan_resolver(), id);
      return cmd_locate(locator::RemoteLocator(d.transport(), remote), id);
    }
    if (*populate) {
      auto s = d.populate_locator();
      std::cout << "repositories " << s.repositories << "\nrecords " << s.records
                << "\nrows_inserted " << s.rows_inserted << "\nfailures " << s.failures.size()
                << "\n";
      for (const auto& [r, why] : s.failures) std::cerr << r << ": " << why << "\n";
      return s.failures.empty() ? 0 : 1;
    }
    if (*load) {
      std::cout << "rows_inserted " << d.locator().put(locator::parse_batch(read_file(rows_file)))
                << "\n";
      return 0;
    }
    if (*ourl) return cmd_openurl(d, kev, out_file, trace);
    if (*oai_cmd)
      return cmd_oai(d.transport(), oai_base.empty() ? config.endpoints.federator : oai_base,
                     oai_args);
    if (*transforms) return cmd_transforms(d.registry());
    if (*scen) {
      auto stats = scenario::run(d, sopts);
      std::cout << scenario::format(stats);
      return stats.ok() ? 0 : 1;
    }
  } catch (const Usage& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 2;
}
