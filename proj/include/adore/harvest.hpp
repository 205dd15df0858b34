#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adore/oai.hpp"
#include "adore/transport.hpp"

// OAI-PMH harvesting client.
namespace adore::oai {

struct HarvestOptions {
  std::string prefix;
  std::optional<UtcTimestamp> from;
  std::optional<UtcTimestamp> until;
  std::optional<std::string> set;
  bool headers_only = false;
};

struct HarvestStats {
  std::size_t records = 0;
  std::size_t pages = 0;
  std::optional<UtcTimestamp> max_datestamp;
};

struct HarvestPage {
  std::vector<Record> records;
  std::optional<std::string> token;  // absent or empty when exhausted
};

class Harvester {
 public:
  explicit Harvester(Transport& transport) : transport_(transport) {}

  // Follows resumption tokens to exhaustion, calling `visit` in server
  // order. noRecordsMatch yields nothing. Throws ProtocolError for any other
  // protocol error and Error(kTransportFailure) for transport problems and
  // non-200 statuses.
  HarvestStats harvest(const std::string& base_url, const HarvestOptions& options,
                       const std::function<void(const Record&)>& visit);
  std::vector<Record> harvest_all(const std::string& base_url, const HarvestOptions& options,
                                  HarvestStats* stats = nullptr);

  // One request: a first page when `token` is empty, otherwise a continuation.
  HarvestPage list_page(const std::string& base_url, const HarvestOptions& options,
                        const std::optional<std::string>& token);

  Record get_record(const std::string& base_url, const std::string& identifier,
                    const std::string& prefix);
  Identity identify(const std::string& base_url);
  std::vector<MetadataFormat> list_metadata_formats(
      const std::string& base_url, const std::optional<std::string>& identifier = {});
  std::vector<SetInfo> list_sets(const std::string& base_url);

  // Raw response body for a request; used for byte-level comparisons.
  std::string fetch(const std::string& base_url, const QueryParams& params);

 private:
  Transport& transport_;
};

}  // namespace adore::oai
