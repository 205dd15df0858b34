#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adore/error.hpp"
#include "adore/timestamp.hpp"
#include "adore/transport.hpp"
#include "adore/util.hpp"

// OAI-PMH 2.0 protocol engine, independent of where records come from.
namespace adore::oai {

inline constexpr std::string_view kOaiNs = "http://www.openarchives.org/OAI/2.0/";
inline constexpr std::string_view kGranularity = "YYYY-MM-DDThh:mm:ssZ";

enum class OaiErrc {
  kBadVerb,
  kBadArgument,
  kBadResumptionToken,
  kCannotDisseminateFormat,
  kIdDoesNotExist,
  kNoRecordsMatch,
  kNoMetadataFormats,
  kNoSetHierarchy,
};

// Protocol error code as it appears in `<error code="...">`.
std::string_view oai_code(OaiErrc code);
std::optional<OaiErrc> parse_oai_code(std::string_view text);

// Raised by record sources and request parsing; rendered in-band.
class OaiError : public std::runtime_error {
 public:
  OaiError(OaiErrc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  OaiErrc code() const noexcept { return code_; }

 private:
  OaiErrc code_;
};

// An error response received from a remote repository.
class ProtocolError : public Error {
 public:
  ProtocolError(OaiErrc code, const std::string& message)
      : Error(Errc::kProtocolError, std::string(oai_code(code)) + ": " + message),
        oai_(code) {}
  OaiErrc oai_errc() const noexcept { return oai_; }

 private:
  OaiErrc oai_;
};

enum class Verb {
  kIdentify,
  kListMetadataFormats,
  kListSets,
  kListIdentifiers,
  kListRecords,
  kGetRecord,
};

std::string_view verb_name(Verb verb);

struct OaiRequest {
  Verb verb = Verb::kIdentify;
  std::optional<std::string> identifier;
  std::optional<std::string> metadata_prefix;
  std::optional<UtcTimestamp> from;
  // Day-granularity `until` is widened to the last second of that day.
  std::optional<UtcTimestamp> until;
  std::optional<std::string> set;
  std::optional<std::string> resumption_token;
  QueryParams args;  // as received, for the response echo
};

// Throws OaiError: kBadVerb, kBadArgument.
OaiRequest parse_request(const QueryParams& query);

struct Header {
  std::string identifier;
  UtcTimestamp datestamp;
  std::vector<std::string> sets;
};

struct Record {
  Header header;
  // Serialized XML element without a declaration; empty for headers.
  std::string metadata;
};

struct MetadataFormat {
  std::string prefix;
  std::string schema;
  std::string ns;
};

struct SetInfo {
  std::string spec;
  std::string name;
};

struct Identity {
  std::string repository_name;
  std::string base_url;
  std::string admin_email = "admin@localhost";
  UtcTimestamp earliest_datestamp;
  std::string deleted_record = "no";
  std::vector<std::string> descriptions;  // XML fragments
};

struct ListQuery {
  std::string prefix;
  std::optional<UtcTimestamp> from;
  std::optional<UtcTimestamp> until;
  std::optional<std::string> set;
};

struct ListPage {
  std::vector<Record> records;
  // Opaque source position after the last record; nullopt when done.
  std::optional<std::string> next_cursor;
  std::optional<std::size_t> complete_list_size;
};

// What a repository must provide to be served by the engine. Sources signal
// protocol failures by throwing OaiError and must be safe for concurrent
// calls.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual Identity identify() const = 0;
  // With an identifier: the formats available for that item
  // (idDoesNotExist when unknown).
  virtual std::vector<MetadataFormat> formats(
      const std::optional<std::string>& identifier) const = 0;
  // noSetHierarchy when sets are not supported.
  virtual std::vector<SetInfo> sets() const = 0;
  // idDoesNotExist, then cannotDisseminateFormat.
  virtual Record get(const std::string& identifier, const std::string& prefix) const = 0;
  // cannotDisseminateFormat, noSetHierarchy; an unknown cursor is
  // reported as badResumptionToken. An empty result is not an error here.
  virtual ListPage list(const ListQuery& query, const std::string& cursor,
                        std::size_t limit, bool headers_only) const = 0;
};

struct EngineOptions {
  std::size_t page_size = 100;
};

// Renders the response for a parsed request. Protocol errors become
// `<error>` elements; other exceptions propagate.
std::string dispatch(const RecordSource& source, const OaiRequest& request,
                     UtcTimestamp now, const EngineOptions& options = {});

// parse_request + dispatch, including badVerb/badArgument rendering.
std::string handle(const RecordSource& source, const QueryParams& query,
                   UtcTimestamp now, const EngineOptions& options = {});

// HTTP handler serving `source`; upstream outages map to 503.
Handler make_handler(const RecordSource& source, Clock clock, EngineOptions options = {});

// Resumption tokens are self-contained: they carry the source cursor and the
// original arguments and are sealed with a digest of both.
struct TokenState {
  Verb verb = Verb::kListRecords;
  std::string cursor;
  ListQuery query;
  std::size_t page_size = 0;
  std::size_t delivered = 0;
};
std::string encode_token(const TokenState& state);
// Throws OaiError(kBadResumptionToken).
TokenState decode_token(std::string_view token);

// Reversible mapping between arbitrary strings and setSpec-safe tokens.
std::string encode_set_token(std::string_view text);
std::optional<std::string> decode_set_token(std::string_view token);

// Strips a leading XML declaration so the payload can be embedded.
std::string_view strip_declaration(std::string_view xml);

}  // namespace adore::oai
