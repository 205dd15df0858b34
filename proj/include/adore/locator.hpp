#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "adore/didl.hpp"
#include "adore/harvest.hpp"
#include "adore/transport.hpp"

// Identifier Locator: a package table (package id -> repository) and a
// content table (content id -> package id + xml id).
namespace adore::locator {

struct PackageRow {
  std::string package_id;
  std::string repo_base_url;
  // AIP creation time when known; orders versions.
  std::optional<UtcTimestamp> created;
  bool operator==(const PackageRow&) const = default;
};

struct ContentRow {
  std::string content_id;
  std::string package_id;
  std::string xml_id;
  bool operator==(const ContentRow&) const = default;
};

using Row = std::variant<PackageRow, ContentRow>;

struct FetchPlan {
  // nullopt when the package row has not been loaded.
  std::optional<std::string> repo_base_url;
  std::string package_id;
  std::optional<std::string> xml_id;
  bool operator==(const FetchPlan&) const = default;
};

class PlanResolver {
 public:
  virtual ~PlanResolver() = default;
  // Package id, package id + fragment, or content id. Multi-version content
  // ids yield one plan per version, newest first. Throws Error(kNotFound).
  virtual std::vector<FetchPlan> resolve(const std::string& id) const = 0;
};

class Locator : public PlanResolver {
 public:
  Locator() = default;
  // Persistent locator: replays `<dir>/rows.tsv` and `<dir>/harvest-state.tsv`.
  static std::unique_ptr<Locator> open(const std::string& dir);

  // Idempotent upsert. A package row only fills in a missing `created`.
  // Returns whether the row changed state. Throws Error(kConflictingPackageRow).
  bool put(const Row& row);
  // All-or-nothing: rows are checked for conflicts before any is applied.
  std::size_t put(const std::vector<Row>& rows);

  std::vector<FetchPlan> resolve(const std::string& id) const override;

  std::optional<PackageRow> package(const std::string& package_id) const;
  std::vector<PackageRow> packages() const;
  std::vector<ContentRow> contents() const;
  std::size_t package_count() const;
  std::size_t content_count() const;

  // Highest datestamp harvested from a repository.
  std::optional<UtcTimestamp> harvested_until(const std::string& repo) const;
  void set_harvested_until(const std::string& repo, UtcTimestamp t);

 private:
  bool put_locked(const Row& row, bool journal);
  void check_locked(const Row& row) const;
  void write_state_locked() const;

  std::string dir_;
  mutable std::shared_mutex mu_;
  std::vector<PackageRow> packages_;
  std::map<std::string, std::size_t> package_index_;
  std::vector<ContentRow> contents_;
  std::map<std::string, std::vector<std::size_t>> content_index_;
  std::map<std::string, UtcTimestamp> harvest_state_;
};

// Batch format, one row per line:
//   P <tab> package_id <tab> repo_base_url [<tab> created ISO 8601]
//   C <tab> content_id <tab> package_id <tab> xml_id
// Blank lines and lines starting with '#' are ignored. Throws
// Error(kBadManifest) with the line number.
std::vector<Row> parse_batch(std::string_view text);
std::string format_batch(const std::vector<Row>& rows);

// One package row plus one content row per extracted identifier.
std::vector<Row> rows_for(const didl::DidlDocument& doc, const std::string& repo_base_url);

// Identifiers-only projection: the package id, its creation time and every
// (content id, xml id) pair.
inline constexpr std::string_view kIdentifiersNs = "urn:adore:identifiers";
std::string identifiers_xml(const didl::DidlDocument& doc);
// Rows from an identifiers_xml payload. Throws Error(kProtocolError).
std::vector<Row> rows_from_identifiers(std::string_view xml, const std::string& repo_base_url);

struct PopulateOptions {
  std::string prefix = "DIDL";
};

struct PopulateStats {
  std::size_t repositories = 0;
  std::size_t records = 0;
  std::size_t rows_inserted = 0;
  // Repositories whose harvest failed, with the reason; rows from the
  // others are kept.
  std::vector<std::pair<std::string, std::string>> failures;
};

// Discovers repositories through the index and harvests each, resuming from
// the stored harvest state. The resume window includes the previous maximum
// datestamp; upserts make the overlap harmless.
PopulateStats populate_from_harvest(Locator& locator, oai::Harvester& harvester,
                                    const std::string& index_base_url,
                                    const PopulateOptions& options = {});

// HTTP lookup: `?id=<identifier>` answers
//   {"id": ..., "plans": [{"repository": ..|null, "package_id": ..,
//                          "xml_id": ..|null}]}
// with 404 and {"id": .., "error": "NotFound"} on a miss.
Handler make_locator_handler(const PlanResolver& resolver);

// Client for a remote lookup endpoint. Misses throw Error(kNotFound);
// transport failures and unexpected statuses throw Error(kUpstreamUnavailable).
class RemoteLocator : public PlanResolver {
 public:
  RemoteLocator(Transport& transport, std::string base_url)
      : transport_(transport), base_url_(std::move(base_url)) {}
  std::vector<FetchPlan> resolve(const std::string& id) const override;

 private:
  Transport& transport_;
  std::string base_url_;
};

std::string plans_json(const std::string& id, const std::vector<FetchPlan>& plans);

}  // namespace adore::locator
