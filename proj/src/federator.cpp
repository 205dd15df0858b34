#include "adore/federator.hpp"

#include <algorithm>

#include "adore/error.hpp"
#include "adore/harvest.hpp"
#include "adore/repo_index.hpp"
#include "adore/repository.hpp"
#include "adore/util.hpp"

namespace adore::fed {
namespace {

using oai::OaiErrc;
using oai::OaiError;

[[noreturn]] void upstream(const std::string& what, const std::exception& e) {
  throw Error(Errc::kUpstreamUnavailable, what + ": " + e.what());
}

// Position of one record in the federated sequence: repository, the inner
// token that yields its page (empty for the first page) and its offset in
// that page.
struct Position {
  std::size_t repo = 0;
  std::string token;
  std::size_t skip = 0;
};

std::string encode_cursor(const std::string& repo, const Position& p) {
  return escape_field(repo) + "\t" + escape_field(p.token) + "\t" + std::to_string(p.skip);
}

}  // namespace

std::vector<PrefixBinding> default_prefixes(std::string_view ns) {
  std::string n(ns);
  return {
      {std::string(kCompletedPrefix), n + "service/didl_completed",
       std::string(repo::kDidlSchema), std::string(didl::kDidlNs)},
      {"oai_dc", n + "service/oai_dc", "http://www.openarchives.org/OAI/2.0/oai_dc.xsd",
       std::string(dip::kOaiDcNs)},
      {"identifiers", n + "service/identifiers", "urn:adore:identifiers identifiers.xsd",
       std::string(locator::kIdentifiersNs)},
      {"mets", n + "service/mets", "http://www.loc.gov/standards/mets/mets.xsd",
       std::string(dip::kMetsNs)},
  };
}

std::string repo_set_spec(std::string_view base_url) {
  return std::string(kSetPrefix) + oai::encode_set_token(base_url);
}

std::optional<std::string> repo_from_set_spec(std::string_view spec) {
  if (!spec.starts_with(kSetPrefix)) return std::nullopt;
  return oai::decode_set_token(spec.substr(kSetPrefix.size()));
}

Federator::Federator(Transport& transport, const locator::PlanResolver& locator,
                     const dip::Engine& engine, FederatorOptions options, Clock clock)
    : transport_(transport),
      locator_(locator),
      engine_(engine),
      options_(std::move(options)),
      clock_(std::move(clock)) {}

std::vector<std::string> Federator::repositories() const {
  std::lock_guard lock(cache_mu_);
  UtcTimestamp now = clock_();
  if (fetched_at_ && now < *fetched_at_ + options_.index_ttl_seconds) return repos_;
  oai::Harvester harvester(transport_);
  std::vector<std::string> repos;
  try {
    oai::HarvestOptions opts;
    opts.prefix = std::string(index::kIndexPrefix);
    opts.headers_only = true;
    harvester.harvest(options_.index_base_url, opts,
                      [&](const oai::Record& r) { repos.push_back(r.header.identifier); });
  } catch (const std::exception& e) {
    upstream("repository index " + options_.index_base_url, e);
  }
  repos_ = std::move(repos);
  fetched_at_ = now;
  return repos_;
}

void Federator::invalidate() const {
  std::lock_guard lock(cache_mu_);
  fetched_at_.reset();
}

const PrefixBinding* Federator::binding(std::string_view prefix) const {
  for (const auto& b : options_.prefixes) {
    if (b.prefix != prefix) continue;
    for (const auto& row : engine_.table().by_service(b.service_id)) {
      if (engine_.registry().find(row.transform_ref)) return &b;
    }
  }
  return nullptr;
}

void Federator::check_prefix(const std::string& prefix) const {
  if (prefix != repo::kDidlPrefix && !binding(prefix))
    throw OaiError(OaiErrc::kCannotDisseminateFormat, "unsupported metadataPrefix " + prefix);
}

oai::Identity Federator::identify() const {
  oai::Identity id;
  id.repository_name = options_.name;
  id.base_url = options_.base_url;
  oai::Harvester harvester(transport_);
  std::optional<UtcTimestamp> earliest;
  for (const auto& repo : repositories()) {
    try {
      UtcTimestamp t = harvester.identify(repo).earliest_datestamp;
      if (!earliest || t < *earliest) earliest = t;
    } catch (const std::exception&) {
      // an unreachable repository does not hide the others
    }
  }
  id.earliest_datestamp = earliest.value_or(UtcTimestamp{});
  return id;
}

std::vector<oai::MetadataFormat> Federator::formats(
    const std::optional<std::string>& identifier) const {
  if (identifier) {
    try {
      locator_.resolve(*identifier);
    } catch (const Error& e) {
      if (e.code() != Errc::kNotFound) throw;
      throw OaiError(OaiErrc::kIdDoesNotExist, "unknown identifier " + *identifier);
    }
  }
  std::vector<oai::MetadataFormat> out{repo::didl_format()};
  for (const auto& b : options_.prefixes) {
    if (binding(b.prefix) == &b) out.push_back({b.prefix, b.schema, b.ns});
  }
  return out;
}

std::vector<oai::SetInfo> Federator::sets() const {
  std::vector<oai::SetInfo> out;
  for (const auto& repo : repositories()) out.push_back({repo_set_spec(repo), repo});
  return out;
}

std::optional<std::string> Federator::disseminate(const oai::Record& stored,
                                                  const PrefixBinding& b) const {
  didl::DidlDocument doc = didl::parse_didl(stored.metadata);
  didl::DidlDocument completed = dip::insert_dims(doc, engine_.table());
  try {
    dip::Output out = engine_.apply(completed, {doc.package_id().base, std::nullopt},
                                    b.service_id);
    return std::string(oai::strip_declaration(out.bytes));
  } catch (const Error& e) {
    if (e.code() == Errc::kServiceNotApplicable) return std::nullopt;
    throw;
  }
}

oai::Record Federator::get(const std::string& identifier, const std::string& prefix) const {
  std::vector<locator::FetchPlan> plans;
  try {
    plans = locator_.resolve(identifier);
  } catch (const Error& e) {
    if (e.code() == Errc::kNotFound)
      throw OaiError(OaiErrc::kIdDoesNotExist, "unknown identifier " + identifier);
    if (e.code() == Errc::kUpstreamUnavailable) throw;
    upstream("identifier locator", e);
  }
  const locator::FetchPlan& plan = plans.front();
  if (!plan.repo_base_url)
    throw OaiError(OaiErrc::kIdDoesNotExist, "no repository holds " + plan.package_id);
  check_prefix(prefix);

  oai::Harvester harvester(transport_);
  oai::Record stored;
  try {
    stored = harvester.get_record(*plan.repo_base_url, plan.package_id,
                                  std::string(repo::kDidlPrefix));
  } catch (const oai::ProtocolError& e) {
    if (e.oai_errc() == OaiErrc::kIdDoesNotExist)
      throw OaiError(OaiErrc::kIdDoesNotExist, plan.package_id + " is not in its repository");
    upstream(*plan.repo_base_url, e);
  } catch (const Error& e) {
    upstream(*plan.repo_base_url, e);
  }
  stored.header.sets = {repo_set_spec(*plan.repo_base_url)};
  if (prefix == repo::kDidlPrefix) return stored;
  auto body = disseminate(stored, *binding(prefix));
  if (!body)
    throw OaiError(OaiErrc::kCannotDisseminateFormat,
                   prefix + " does not apply to " + plan.package_id);
  stored.metadata = std::move(*body);
  return stored;
}

oai::ListPage Federator::list(const oai::ListQuery& query, const std::string& cursor,
                              std::size_t limit, bool headers_only) const {
  check_prefix(query.prefix);
  const PrefixBinding* b = query.prefix == repo::kDidlPrefix ? nullptr : binding(query.prefix);
  std::vector<std::string> repos = repositories();
  if (query.set) {
    auto wanted = repo_from_set_spec(*query.set);
    if (!wanted || std::find(repos.begin(), repos.end(), *wanted) == repos.end()) return {};
    repos = {*wanted};
  }

  Position pos;
  if (!cursor.empty()) {
    auto f = split(cursor, '\t');
    std::size_t used = 0;
    bool ok = f.size() == 3;
    if (ok) {
      std::string repo = unescape_field(f[0]);
      auto it = std::find(repos.begin(), repos.end(), repo);
      ok = it != repos.end();
      pos.repo = static_cast<std::size_t>(it - repos.begin());
      pos.token = unescape_field(f[1]);
      try {
        pos.skip = std::stoull(f[2], &used);
      } catch (const std::exception&) {
        ok = false;
      }
      ok = ok && used == f[2].size();
    }
    if (!ok) throw OaiError(OaiErrc::kBadResumptionToken, "unknown cursor");
  }

  oai::HarvestOptions opts;
  opts.prefix = std::string(repo::kDidlPrefix);
  opts.from = query.from;
  opts.until = query.until;
  opts.headers_only = headers_only && !b;

  oai::Harvester harvester(transport_);
  oai::ListPage page;
  // One record past `limit` is located so the last page carries no token.
  while (pos.repo < repos.size()) {
    const std::string& repo = repos[pos.repo];
    oai::HarvestPage upstream_page;
    try {
      upstream_page = harvester.list_page(
          repo, opts, pos.token.empty() ? std::nullopt : std::optional<std::string>(pos.token));
    } catch (const oai::ProtocolError& e) {
      if (e.oai_errc() == OaiErrc::kBadResumptionToken)
        throw OaiError(OaiErrc::kBadResumptionToken, repo + " rejected the continuation");
      upstream(repo, e);
    } catch (const Error& e) {
      upstream(repo, e);
    }
    for (std::size_t i = pos.skip; i < upstream_page.records.size(); ++i) {
      oai::Record r = std::move(upstream_page.records[i]);
      if (b) {
        auto body = disseminate(r, *b);
        if (!body) continue;
        r.metadata = headers_only ? std::string() : std::move(*body);
      }
      if (page.records.size() == limit) {
        page.next_cursor = encode_cursor(repo, {pos.repo, pos.token, i});
        return page;
      }
      r.header.sets = {repo_set_spec(repo)};
      page.records.push_back(std::move(r));
    }
    if (upstream_page.token && !upstream_page.token->empty()) {
      pos.token = *upstream_page.token;
    } else {
      ++pos.repo;
      pos.token.clear();
    }
    pos.skip = 0;
  }
  return page;
}

}  // namespace adore::fed
