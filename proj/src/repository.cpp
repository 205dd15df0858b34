#include "adore/repository.hpp"

#include "adore/didl.hpp"

namespace adore::repo {
namespace {

using oai::OaiErrc;
using oai::OaiError;

void require_didl(const std::string& prefix) {
  if (prefix != kDidlPrefix)
    throw OaiError(OaiErrc::kCannotDisseminateFormat, "only DIDL is disseminated here");
}

std::string encode_cursor(const tape::IndexEntry& e) {
  return std::to_string(e.datestamp.seconds()) + ":" + std::to_string(e.seq);
}

std::optional<tape::Cursor> decode_cursor(const std::string& text) {
  if (text.empty()) return std::nullopt;
  size_t colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    size_t used = 0;
    tape::Cursor c{UtcTimestamp(std::stoll(text.substr(0, colon), &used)), 0};
    if (used != colon) throw std::invalid_argument(text);
    c.seq = std::stoull(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument(text);
    return c;
  } catch (const std::exception&) {
    throw OaiError(OaiErrc::kBadResumptionToken, "unknown cursor");
  }
}

}  // namespace

oai::MetadataFormat didl_format() {
  return {std::string(kDidlPrefix), std::string(kDidlSchema), std::string(didl::kDidlNs)};
}

TapeRepository::TapeRepository(std::string name, std::string base_url,
                               std::shared_ptr<tape::Tape> tape, UtcTimestamp created)
    : name_(std::move(name)),
      base_url_(std::move(base_url)),
      tape_(std::move(tape)),
      created_(created) {}

oai::Identity TapeRepository::identify() const {
  oai::Identity id;
  id.repository_name = name_;
  id.base_url = base_url_;
  id.earliest_datestamp = tape_->earliest().value_or(created_);
  return id;
}

std::vector<oai::MetadataFormat> TapeRepository::formats(
    const std::optional<std::string>& identifier) const {
  if (identifier && !tape_->contains(*identifier))
    throw OaiError(OaiErrc::kIdDoesNotExist, "unknown identifier " + *identifier);
  return {didl_format()};
}

std::vector<oai::SetInfo> TapeRepository::sets() const {
  throw OaiError(OaiErrc::kNoSetHierarchy, "this repository does not support sets");
}

oai::Record TapeRepository::get(const std::string& identifier, const std::string& prefix) const {
  if (!tape_->contains(identifier))
    throw OaiError(OaiErrc::kIdDoesNotExist, "unknown identifier " + identifier);
  require_didl(prefix);
  tape::TapeRecord r = tape_->get(identifier);
  return {{r.package_id, r.datestamp, {}}, std::move(r.didl_bytes)};
}

oai::ListPage TapeRepository::list(const oai::ListQuery& query, const std::string& cursor,
                                   std::size_t limit, bool headers_only) const {
  require_didl(query.prefix);
  if (query.set) throw OaiError(OaiErrc::kNoSetHierarchy, "this repository does not support sets");
  auto after = decode_cursor(cursor);
  auto entries = tape_->select(query.from, query.until, after, limit + 1);
  oai::ListPage page;
  if (entries.size() > limit) {
    entries.pop_back();
    page.next_cursor = encode_cursor(entries.back());
  }
  page.records.reserve(entries.size());
  for (const auto& e : entries) {
    oai::Record rec{{e.package_id, e.datestamp, {}}, {}};
    if (!headers_only) rec.metadata = tape_->read(e).didl_bytes;
    page.records.push_back(std::move(rec));
  }
  return page;
}

}  // namespace adore::repo
