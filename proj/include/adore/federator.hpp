#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adore/dip.hpp"
#include "adore/locator.hpp"
#include "adore/oai.hpp"
#include "adore/transport.hpp"

// Single OAI-PMH front door over every indexed autonomous repository.
//
// Record identifiers are package ids and datestamps are AIP creation times.
// Each repository is exposed as the set `repo:<token>`, where the token is
// encode_set_token(base URL). Lists run over repositories in registration
// order, then in each repository's own datestamp order.
namespace adore::fed {

inline constexpr std::string_view kCompletedPrefix = "DIDL:completed";
inline constexpr std::string_view kSetPrefix = "repo:";

// A metadataPrefix served by applying a container-level DIP service to
// each completed document.
struct PrefixBinding {
  std::string prefix;
  std::string service_id;
  std::string schema;
  std::string ns;
};

// DIDL:completed, oai_dc, identifiers and mets, bound to the services of
// dip::deployment_table(ns).
std::vector<PrefixBinding> default_prefixes(std::string_view ns);

struct FederatorOptions {
  std::string name = "aDORe Federator";
  std::string base_url;
  std::string index_base_url;
  std::vector<PrefixBinding> prefixes;
  // Repository list freshness bound.
  std::int64_t index_ttl_seconds = 10;
};

std::string repo_set_spec(std::string_view base_url);
std::optional<std::string> repo_from_set_spec(std::string_view spec);

class Federator : public oai::RecordSource {
 public:
  // Upstream failures (index, locator, repositories) surface as
  // Error(kUpstreamUnavailable).
  Federator(Transport& transport, const locator::PlanResolver& locator,
            const dip::Engine& engine, FederatorOptions options, Clock clock = system_clock());

  oai::Identity identify() const override;
  std::vector<oai::MetadataFormat> formats(
      const std::optional<std::string>& identifier) const override;
  std::vector<oai::SetInfo> sets() const override;
  oai::Record get(const std::string& identifier, const std::string& prefix) const override;
  oai::ListPage list(const oai::ListQuery& query, const std::string& cursor, std::size_t limit,
                     bool headers_only) const override;

  // Indexed repositories in registration order, refreshed after the TTL.
  std::vector<std::string> repositories() const;
  void invalidate() const;

  const FederatorOptions& options() const { return options_; }

 private:
  const PrefixBinding* binding(std::string_view prefix) const;
  void check_prefix(const std::string& prefix) const;
  // Applies the prefix's service; nullopt when it does not bind.
  std::optional<std::string> disseminate(const oai::Record& stored,
                                         const PrefixBinding& binding) const;

  Transport& transport_;
  const locator::PlanResolver& locator_;
  const dip::Engine& engine_;
  FederatorOptions options_;
  Clock clock_;

  mutable std::mutex cache_mu_;
  mutable std::vector<std::string> repos_;
  mutable std::optional<UtcTimestamp> fetched_at_;
};

}  // namespace adore::fed
