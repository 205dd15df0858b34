#include "adore/repo_index.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include "adore/xml.hpp"

namespace adore::index {
namespace {

using oai::OaiErrc;
using oai::OaiError;

oai::MetadataFormat index_format() {
  return {std::string(kIndexPrefix), "urn:adore:index index.xsd", std::string(kIndexNs)};
}

void require_index(const std::string& prefix) {
  if (prefix != kIndexPrefix)
    throw OaiError(OaiErrc::kCannotDisseminateFormat, "the index only disseminates INDEX");
}

oai::Record to_record(const RepoEntry& e, bool headers_only) {
  return {{e.base_url, e.created, {}}, headers_only ? std::string() : index_metadata(e)};
}

}  // namespace

RepositoryIndex RepositoryIndex::open(const std::string& path) {
  RepositoryIndex index;
  index.journal_ = path;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3)
      throw Error(Errc::kCorruptRecord, path + ":" + std::to_string(n) + ": bad journal line");
    RepoEntry e;
    try {
      e.created = UtcTimestamp(std::stoll(f[0]));
    } catch (const std::exception&) {
      throw Error(Errc::kCorruptRecord, path + ":" + std::to_string(n) + ": bad datestamp");
    }
    e.base_url = unescape_field(f[1]);
    e.meta = unescape_field(f[2]);
    if (index.find(e.base_url))
      throw Error(Errc::kCorruptRecord, path + ": base URL registered twice: " + e.base_url);
    index.entries_.push_back(std::move(e));
  }
  return index;
}

RepositoryIndex::RepositoryIndex(RepositoryIndex&& other) noexcept
    : journal_(std::move(other.journal_)), entries_(std::move(other.entries_)) {}

RepoEntry RepositoryIndex::register_repository(const std::string& base_url,
                                               const std::string& meta, const Clock& clock) {
  std::unique_lock lock(mu_);
  for (const auto& e : entries_) {
    if (e.base_url == base_url)
      throw Error(Errc::kDuplicateBaseUrl, "already registered: " + base_url);
  }
  RepoEntry e{base_url, clock(), meta};
  if (!journal_.empty()) {
    std::ofstream out(journal_, std::ios::binary | std::ios::app);
    out << e.created.seconds() << '\t' << escape_field(e.base_url) << '\t'
        << escape_field(e.meta) << '\n';
    out.flush();
    if (!out) throw Error(Errc::kIoFailure, "cannot append to " + journal_);
  }
  entries_.push_back(e);
  return e;
}

std::optional<RepoEntry> RepositoryIndex::find(const std::string& base_url) const {
  std::shared_lock lock(mu_);
  for (const auto& e : entries_) {
    if (e.base_url == base_url) return e;
  }
  return std::nullopt;
}

std::vector<RepoEntry> RepositoryIndex::entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::size_t RepositoryIndex::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::string index_metadata(const RepoEntry& e) {
  return "<repository xmlns=\"" + std::string(kIndexNs) + "\"><baseURL>" +
         xml::escape_text(e.base_url) + "</baseURL><created>" + e.created.iso8601() +
         "</created><description>" + xml::escape_text(e.meta) + "</description></repository>";
}

RepoEntry parse_index_metadata(std::string_view text) {
  xml::Element root = xml::parse(text);
  if (root.ns != kIndexNs || root.local != "repository")
    throw Error(Errc::kProtocolError, "not an INDEX record");
  RepoEntry e;
  const xml::Element* base = root.first(kIndexNs, "baseURL");
  const xml::Element* created = root.first(kIndexNs, "created");
  if (!base || !created) throw Error(Errc::kProtocolError, "INDEX record lacks baseURL/created");
  e.base_url = base->text();
  auto t = UtcTimestamp::parse_iso8601(created->text());
  if (!t) throw Error(Errc::kProtocolError, "bad created datestamp in INDEX record");
  e.created = *t;
  if (const xml::Element* d = root.first(kIndexNs, "description")) e.meta = d->text();
  return e;
}

oai::Identity IndexRecordSource::identify() const {
  oai::Identity id;
  id.repository_name = "Repository Index";
  id.base_url = base_url_;
  auto entries = index_.entries();
  if (!entries.empty()) {
    id.earliest_datestamp =
        std::min_element(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
          return a.created < b.created;
        })->created;
  }
  return id;
}

std::vector<oai::MetadataFormat> IndexRecordSource::formats(
    const std::optional<std::string>& identifier) const {
  if (identifier && !index_.find(*identifier))
    throw OaiError(OaiErrc::kIdDoesNotExist, "unknown repository " + *identifier);
  return {index_format()};
}

std::vector<oai::SetInfo> IndexRecordSource::sets() const {
  throw OaiError(OaiErrc::kNoSetHierarchy, "the index does not support sets");
}

oai::Record IndexRecordSource::get(const std::string& identifier, const std::string& prefix) const {
  auto e = index_.find(identifier);
  if (!e) throw OaiError(OaiErrc::kIdDoesNotExist, "unknown repository " + identifier);
  require_index(prefix);
  return to_record(*e, false);
}

oai::ListPage IndexRecordSource::list(const oai::ListQuery& query, const std::string& cursor,
                                      std::size_t limit, bool headers_only) const {
  require_index(query.prefix);
  if (query.set) throw OaiError(OaiErrc::kNoSetHierarchy, "the index does not support sets");
  // Cursor: number of registrations already examined.
  std::size_t pos = 0;
  if (!cursor.empty()) {
    try {
      size_t used = 0;
      pos = std::stoull(cursor, &used);
      if (used != cursor.size()) throw std::invalid_argument(cursor);
    } catch (const std::exception&) {
      throw OaiError(OaiErrc::kBadResumptionToken, "unknown cursor");
    }
  }
  // Registration order; the single registrar's clock makes it datestamp
  // order as well.
  auto entries = index_.entries();
  oai::ListPage page;
  for (; pos < entries.size(); ++pos) {
    const auto& e = entries[pos];
    if (query.from && e.created < *query.from) continue;
    if (query.until && e.created > *query.until) continue;
    if (page.records.size() == limit) {
      page.next_cursor = std::to_string(pos);
      break;
    }
    page.records.push_back(to_record(e, headers_only));
  }
  return page;
}

}  // namespace adore::index
