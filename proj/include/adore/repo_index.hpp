#pragma once

#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "adore/oai.hpp"

// Registry of autonomous repositories. Entries are append-only: a base URL is
// registered once and its creation datestamp never changes.
namespace adore::index {

inline constexpr std::string_view kIndexPrefix = "INDEX";
inline constexpr std::string_view kIndexNs = "urn:adore:index";

struct RepoEntry {
  std::string base_url;
  UtcTimestamp created;
  std::string meta;
  bool operator==(const RepoEntry&) const = default;
};

// Journal format: one line per registration,
// `<created seconds>\t<escaped base_url>\t<escaped meta>`.
class RepositoryIndex {
 public:
  // In-memory only.
  RepositoryIndex() = default;
  // Replays the journal at `path` (created when missing); later
  // registrations are appended to it.
  static RepositoryIndex open(const std::string& path);

  RepositoryIndex(RepositoryIndex&& other) noexcept;

  // Throws Error(kDuplicateBaseUrl).
  RepoEntry register_repository(const std::string& base_url, const std::string& meta,
                                const Clock& clock);
  std::optional<RepoEntry> find(const std::string& base_url) const;
  // Registration order.
  std::vector<RepoEntry> entries() const;
  std::size_t size() const;

 private:
  std::string journal_;
  mutable std::shared_mutex mu_;
  std::vector<RepoEntry> entries_;
};

std::string index_metadata(const RepoEntry& entry);
// Throws Error(kProtocolError) when the payload is not an INDEX record.
RepoEntry parse_index_metadata(std::string_view xml);

// OAI-PMH view of the index: identifier = base URL, datestamp = created.
class IndexRecordSource : public oai::RecordSource {
 public:
  IndexRecordSource(const RepositoryIndex& index, std::string base_url)
      : index_(index), base_url_(std::move(base_url)) {}

  oai::Identity identify() const override;
  std::vector<oai::MetadataFormat> formats(
      const std::optional<std::string>& identifier) const override;
  std::vector<oai::SetInfo> sets() const override;
  oai::Record get(const std::string& identifier, const std::string& prefix) const override;
  oai::ListPage list(const oai::ListQuery& query, const std::string& cursor, std::size_t limit,
                     bool headers_only) const override;

 private:
  const RepositoryIndex& index_;
  std::string base_url_;
};

}  // namespace adore::index
