#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adore {

// Failure classes raised across the repository components. Protocol-level
// OAI-PMH errors have their own type (see oai.hpp) because they are rendered
// in-band rather than thrown to callers.
enum class Errc {
  kMalformedXml,
  kMissingPackageId,
  kDuplicateXmlId,
  kUnknownXmlId,
  kEmptyManifest,
  kBadManifest,
  kArcWriteFailed,
  kIoFailure,
  kUnknownKey,
  kCorruptRecord,
  kDuplicatePackageId,
  kTapeSealed,
  kUnknownPackageId,
  kBadRange,
  kDuplicateBaseUrl,
  kConflictingPackageRow,
  kNotFound,
  kServiceNotApplicable,
  kUnknownService,
  kUnknownTarget,
  kTransformFailure,
  kMissingReferent,
  kUnsupportedVersion,
  kTransportFailure,
  kProtocolError,
  kUpstreamUnavailable,
  kInvalidArgument,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace adore
