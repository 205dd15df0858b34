#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adore/oai.hpp"

// Black-box OAI-PMH conformance checks run against any RecordSource through
// the full request/response path.
namespace adore::oai {

struct ConformanceProbe {
  std::string prefix;                   // a format every record supports
  std::string unsupported_prefix = "no-such-format";
  bool supports_sets = false;
  std::size_t page_size = 7;            // for the resumption-union check
};

struct ConformanceReport {
  std::size_t checks = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty() && checks > 0; }
};

// Needs at least two records in the source. Covers the verb x argument
// legality matrix, repeated and empty arguments, malformed dates, both
// inclusive date boundaries, the resumption-union property and the
// in-band error codes.
ConformanceReport check_conformance(const RecordSource& source, const ConformanceProbe& probe);

// Independent oracle: the protocol error code (badVerb/badArgument) a
// request must produce, or nullopt when the request is legal.
std::optional<OaiErrc> expected_legality(const QueryParams& query);

}  // namespace adore::oai
