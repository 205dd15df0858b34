#include "adore/locator.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "adore/repo_index.hpp"
#include "adore/xml.hpp"

namespace adore::locator {
namespace {

std::string rows_path(const std::string& dir) { return dir + "/rows.tsv"; }
std::string state_path(const std::string& dir) { return dir + "/harvest-state.tsv"; }

void append_line(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << line;
  out.flush();
  if (!out) throw Error(Errc::kIoFailure, "cannot append to " + path);
}

std::string format_row(const Row& row) {
  if (const auto* p = std::get_if<PackageRow>(&row)) {
    std::string line = "P\t" + escape_field(p->package_id) + "\t" + escape_field(p->repo_base_url);
    if (p->created) line += "\t" + p->created->iso8601();
    return line + "\n";
  }
  const auto& c = std::get<ContentRow>(row);
  return "C\t" + escape_field(c.content_id) + "\t" + escape_field(c.package_id) + "\t" +
         escape_field(c.xml_id) + "\n";
}

}  // namespace

std::unique_ptr<Locator> Locator::open(const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto loc = std::make_unique<Locator>();
  if (std::filesystem::exists(rows_path(dir))) {
    for (const Row& r : parse_batch(read_file(rows_path(dir)))) loc->put_locked(r, false);
  }
  if (std::filesystem::exists(state_path(dir))) {
    std::istringstream in(read_file(state_path(dir)));
    std::string line;
    while (std::getline(in, line)) {
      auto f = split(line, '\t');
      if (f.size() != 2) throw Error(Errc::kCorruptRecord, state_path(dir) + ": bad line");
      try {
        loc->harvest_state_[unescape_field(f[0])] = UtcTimestamp(std::stoll(f[1]));
      } catch (const std::exception&) {
        throw Error(Errc::kCorruptRecord, state_path(dir) + ": bad datestamp");
      }
    }
  }
  loc->dir_ = dir;
  return loc;
}

void Locator::check_locked(const Row& row) const {
  const auto* p = std::get_if<PackageRow>(&row);
  if (!p) return;
  auto it = package_index_.find(p->package_id);
  if (it != package_index_.end() && packages_[it->second].repo_base_url != p->repo_base_url)
    throw Error(Errc::kConflictingPackageRow,
                p->package_id + " is in " + packages_[it->second].repo_base_url + ", not " +
                    p->repo_base_url);
}

bool Locator::put_locked(const Row& row, bool journal) {
  check_locked(row);
  bool changed = false;
  if (const auto* p = std::get_if<PackageRow>(&row)) {
    auto it = package_index_.find(p->package_id);
    if (it == package_index_.end()) {
      package_index_[p->package_id] = packages_.size();
      packages_.push_back(*p);
      changed = true;
    } else if (!packages_[it->second].created && p->created) {
      packages_[it->second].created = p->created;
      changed = true;
    }
  } else {
    const auto& c = std::get<ContentRow>(row);
    auto& slots = content_index_[c.content_id];
    auto same = std::find_if(slots.begin(), slots.end(), [&](std::size_t i) {
      return contents_[i].package_id == c.package_id;
    });
    if (same == slots.end()) {
      slots.push_back(contents_.size());
      contents_.push_back(c);
      changed = true;
    } else if (contents_[*same].xml_id != c.xml_id) {
      contents_[*same].xml_id = c.xml_id;
      changed = true;
    }
  }
  if (changed && journal && !dir_.empty()) append_line(rows_path(dir_), format_row(row));
  return changed;
}

bool Locator::put(const Row& row) {
  std::unique_lock lock(mu_);
  return put_locked(row, true);
}

std::size_t Locator::put(const std::vector<Row>& rows) {
  std::unique_lock lock(mu_);
  std::map<std::string, std::string> pending;
  for (const Row& r : rows) {
    check_locked(r);
    if (const auto* p = std::get_if<PackageRow>(&r)) {
      auto [it, fresh] = pending.emplace(p->package_id, p->repo_base_url);
      if (!fresh && it->second != p->repo_base_url)
        throw Error(Errc::kConflictingPackageRow, p->package_id + " listed in two repositories");
    }
  }
  std::size_t changed = 0;
  for (const Row& r : rows) changed += put_locked(r, true);
  return changed;
}

std::vector<FetchPlan> Locator::resolve(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto repo_of = [&](const std::string& pid) -> std::optional<std::string> {
    auto it = package_index_.find(pid);
    if (it == package_index_.end()) return std::nullopt;
    return packages_[it->second].repo_base_url;
  };
  if (auto it = package_index_.find(id); it != package_index_.end())
    return {{packages_[it->second].repo_base_url, id, std::nullopt}};
  if (auto it = content_index_.find(id); it != content_index_.end()) {
    struct Version {
      FetchPlan plan;
      std::optional<UtcTimestamp> created;
    };
    std::vector<Version> versions;
    for (std::size_t i : it->second) {
      const ContentRow& c = contents_[i];
      std::optional<UtcTimestamp> created;
      if (auto p = package_index_.find(c.package_id); p != package_index_.end())
        created = packages_[p->second].created;
      versions.push_back({{repo_of(c.package_id), c.package_id, c.xml_id}, created});
    }
    // Newest first; unknown creation times sort last.
    std::stable_sort(versions.begin(), versions.end(), [](const Version& a, const Version& b) {
      return a.created > b.created;
    });
    std::vector<FetchPlan> plans;
    for (auto& v : versions) plans.push_back(std::move(v.plan));
    return plans;
  }
  if (size_t hash = id.find('#'); hash != std::string::npos && hash + 1 < id.size()) {
    std::string base = id.substr(0, hash);
    if (auto repo = repo_of(base)) return {{repo, base, id.substr(hash + 1)}};
  }
  throw Error(Errc::kNotFound, "no locator entry for " + id);
}

std::optional<PackageRow> Locator::package(const std::string& package_id) const {
  std::shared_lock lock(mu_);
  auto it = package_index_.find(package_id);
  if (it == package_index_.end()) return std::nullopt;
  return packages_[it->second];
}

std::vector<PackageRow> Locator::packages() const {
  std::shared_lock lock(mu_);
  return packages_;
}

std::vector<ContentRow> Locator::contents() const {
  std::shared_lock lock(mu_);
  return contents_;
}

std::size_t Locator::package_count() const {
  std::shared_lock lock(mu_);
  return packages_.size();
}

std::size_t Locator::content_count() const {
  std::shared_lock lock(mu_);
  return contents_.size();
}

std::optional<UtcTimestamp> Locator::harvested_until(const std::string& repo) const {
  std::shared_lock lock(mu_);
  auto it = harvest_state_.find(repo);
  if (it == harvest_state_.end()) return std::nullopt;
  return it->second;
}

void Locator::set_harvested_until(const std::string& repo, UtcTimestamp t) {
  std::unique_lock lock(mu_);
  harvest_state_[repo] = t;
  write_state_locked();
}

void Locator::write_state_locked() const {
  if (dir_.empty()) return;
  std::string text;
  for (const auto& [repo, t] : harvest_state_)
    text += escape_field(repo) + "\t" + std::to_string(t.seconds()) + "\n";
  std::string tmp = state_path(dir_) + ".tmp";
  write_file(tmp, text);
  std::filesystem::rename(tmp, state_path(dir_));
}

std::vector<Row> parse_batch(std::string_view text) {
  std::vector<Row> rows;
  std::size_t n = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++n;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    auto bad = [&](const std::string& why) {
      return Error(Errc::kBadManifest, "batch line " + std::to_string(n) + ": " + why);
    };
    for (auto& x : f) x = unescape_field(x);
    if (f[0] == "P" && (f.size() == 3 || f.size() == 4)) {
      PackageRow p{f[1], f[2], std::nullopt};
      if (f.size() == 4) {
        p.created = UtcTimestamp::parse_iso8601(f[3]);
        if (!p.created) throw bad("bad created datestamp '" + f[3] + "'");
      }
      if (p.package_id.empty() || p.repo_base_url.empty()) throw bad("empty field");
      rows.emplace_back(std::move(p));
    } else if (f[0] == "C" && f.size() == 4) {
      if (f[1].empty() || f[2].empty() || f[3].empty()) throw bad("empty field");
      rows.emplace_back(ContentRow{f[1], f[2], f[3]});
    } else {
      throw bad("expected P or C row");
    }
  }
  return rows;
}

std::string format_batch(const std::vector<Row>& rows) {
  std::string out;
  for (const Row& r : rows) out += format_row(r);
  return out;
}

std::vector<Row> rows_for(const didl::DidlDocument& doc, const std::string& repo_base_url) {
  std::vector<Row> rows;
  rows.emplace_back(PackageRow{doc.package_id().base, repo_base_url, doc.created()});
  for (const auto& ref : didl::extract_identifiers(doc))
    rows.emplace_back(ContentRow{ref.content_id.uri, doc.package_id().base, ref.xml_id});
  return rows;
}

std::string identifiers_xml(const didl::DidlDocument& doc) {
  std::string out = "<identifiers xmlns=\"" + std::string(kIdentifiersNs) + "\" package=\"" +
                    xml::escape_attribute(doc.package_id().base) + "\" created=\"" +
                    doc.created().iso8601() + "\">";
  for (const auto& ref : didl::extract_identifiers(doc)) {
    out += "<content id=\"" + xml::escape_attribute(ref.content_id.uri) + "\" xmlId=\"" +
           xml::escape_attribute(ref.xml_id) + "\"/>";
  }
  return out + "</identifiers>";
}

std::vector<Row> rows_from_identifiers(std::string_view text, const std::string& repo_base_url) {
  xml::Element root = xml::parse(text);
  if (root.ns != kIdentifiersNs || root.local != "identifiers")
    throw Error(Errc::kProtocolError, "not an identifiers record");
  const std::string* pkg = root.attribute("package");
  const std::string* created = root.attribute("created");
  if (!pkg) throw Error(Errc::kProtocolError, "identifiers record without package");
  std::vector<Row> rows;
  PackageRow p{*pkg, repo_base_url, std::nullopt};
  if (created) p.created = UtcTimestamp::parse_iso8601(*created);
  rows.emplace_back(std::move(p));
  for (const xml::Element* c : root.elements()) {
    const std::string* id = c->attribute("id");
    const std::string* xml_id = c->attribute("xmlId");
    if (c->local != "content" || !id || !xml_id)
      throw Error(Errc::kProtocolError, "malformed content entry");
    rows.emplace_back(ContentRow{*id, *pkg, *xml_id});
  }
  return rows;
}

PopulateStats populate_from_harvest(Locator& locator, oai::Harvester& harvester,
                                    const std::string& index_base_url,
                                    const PopulateOptions& options) {
  PopulateStats stats;
  std::vector<index::RepoEntry> repos;
  for (const auto& r : harvester.harvest_all(index_base_url, {std::string(index::kIndexPrefix)}))
    repos.push_back(index::parse_index_metadata(r.metadata));
  stats.repositories = repos.size();
  for (const auto& repo : repos) {
    try {
      oai::HarvestOptions opts{options.prefix, locator.harvested_until(repo.base_url)};
      auto result = harvester.harvest(repo.base_url, opts, [&](const oai::Record& rec) {
        xml::Element root = xml::parse(rec.metadata);
        std::vector<Row> rows =
            root.ns == kIdentifiersNs
                ? rows_from_identifiers(rec.metadata, repo.base_url)
                : rows_for(didl::from_element(root), repo.base_url);
        stats.rows_inserted += locator.put(rows);
        ++stats.records;
      });
      if (result.max_datestamp) locator.set_harvested_until(repo.base_url, *result.max_datestamp);
    } catch (const std::exception& e) {
      stats.failures.emplace_back(repo.base_url, e.what());
    }
  }
  return stats;
}

std::string plans_json(const std::string& id, const std::vector<FetchPlan>& plans) {
  nlohmann::json out{{"id", id}, {"plans", nlohmann::json::array()}};
  for (const auto& p : plans) {
    nlohmann::json j{{"package_id", p.package_id}};
    j["repository"] = p.repo_base_url ? nlohmann::json(*p.repo_base_url) : nlohmann::json();
    j["xml_id"] = p.xml_id ? nlohmann::json(*p.xml_id) : nlohmann::json();
    out["plans"].push_back(std::move(j));
  }
  return out.dump();
}

Handler make_locator_handler(const PlanResolver& resolver) {
  return [&resolver](const QueryParams& q) {
    Response r;
    r.content_type = "application/json";
    std::optional<std::string> id;
    for (const auto& [k, v] : q) {
      if (k == "id") id = v;
    }
    if (!id || id->empty()) {
      r.status = 400;
      r.body = nlohmann::json{{"error", "InvalidArgument"}, {"message", "missing id"}}.dump();
      return r;
    }
    try {
      r.body = plans_json(*id, resolver.resolve(*id));
    } catch (const Error& e) {
      if (e.code() != Errc::kNotFound) throw;
      r.status = 404;
      r.body = nlohmann::json{{"id", *id}, {"error", "NotFound"}}.dump();
    }
    return r;
  };
}

std::vector<FetchPlan> RemoteLocator::resolve(const std::string& id) const {
  Response r;
  try {
    r = transport_.get(base_url_, {{"id", id}});
  } catch (const Error& e) {
    throw Error(Errc::kUpstreamUnavailable, "locator unavailable: " + std::string(e.what()));
  }
  if (r.status == 404) {
    // Only the locator's own answer means "no entry"; any other 404 is a
    // missing service.
    auto j = nlohmann::json::parse(r.body, nullptr, false);
    if (j.is_object() && j.value("error", "") == "NotFound")
      throw Error(Errc::kNotFound, "no locator entry for " + id);
    throw Error(Errc::kUpstreamUnavailable, "no locator at " + base_url_);
  }
  if (r.status != 200)
    throw Error(Errc::kUpstreamUnavailable, "locator answered HTTP " + std::to_string(r.status));
  try {
    auto j = nlohmann::json::parse(r.body);
    std::vector<FetchPlan> plans;
    for (const auto& p : j.at("plans")) {
      FetchPlan plan;
      plan.package_id = p.at("package_id").get<std::string>();
      if (!p.at("repository").is_null()) plan.repo_base_url = p["repository"].get<std::string>();
      if (!p.at("xml_id").is_null()) plan.xml_id = p["xml_id"].get<std::string>();
      plans.push_back(std::move(plan));
    }
    return plans;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kUpstreamUnavailable, "bad locator response: " + std::string(e.what()));
  }
}

}  // namespace adore::locator
