#include "adore/error.hpp"

namespace adore {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMalformedXml: return "MalformedXml";
    case Errc::kMissingPackageId: return "MissingPackageId";
    case Errc::kDuplicateXmlId: return "DuplicateXmlId";
    case Errc::kUnknownXmlId: return "UnknownXmlId";
    case Errc::kEmptyManifest: return "EmptyManifest";
    case Errc::kBadManifest: return "BadManifest";
    case Errc::kArcWriteFailed: return "ArcWriteFailed";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kUnknownKey: return "UnknownKey";
    case Errc::kCorruptRecord: return "CorruptRecord";
    case Errc::kDuplicatePackageId: return "DuplicatePackageId";
    case Errc::kTapeSealed: return "TapeSealed";
    case Errc::kUnknownPackageId: return "UnknownPackageId";
    case Errc::kBadRange: return "BadRange";
    case Errc::kDuplicateBaseUrl: return "DuplicateBaseUrl";
    case Errc::kConflictingPackageRow: return "ConflictingPackageRow";
    case Errc::kNotFound: return "NotFound";
    case Errc::kServiceNotApplicable: return "ServiceNotApplicable";
    case Errc::kUnknownService: return "UnknownService";
    case Errc::kUnknownTarget: return "UnknownTarget";
    case Errc::kTransformFailure: return "TransformFailure";
    case Errc::kMissingReferent: return "MissingReferent";
    case Errc::kUnsupportedVersion: return "UnsupportedVersion";
    case Errc::kTransportFailure: return "TransportFailure";
    case Errc::kProtocolError: return "ProtocolError";
    case Errc::kUpstreamUnavailable: return "UpstreamUnavailable";
    case Errc::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace adore
