#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "adore/dip.hpp"
#include "adore/locator.hpp"
#include "adore/transport.hpp"
#include "adore/util.hpp"

// OpenURL resolver: KEV ContextObjects in, one Result Set out.
namespace adore::openurl {

inline constexpr std::string_view kVersion = "Z39.88-2004";

// Asks for the version list of the referent instead of a dissemination.
inline constexpr std::string_view kVersionsKey = "adore_versions";

struct ContextObject {
  std::string version;
  std::string referent_id;
  std::optional<std::string> service_type_id;
  // Identifiers of the entities the resolver accepts but does not act on.
  std::optional<std::string> requester_id;
  std::optional<std::string> referrer_id;
  std::optional<std::string> referring_entity_id;
  std::optional<std::string> resolver_id;
  // Every key not consumed above, as received.
  QueryParams extra;
};

// Throws Error: kMissingReferent, kUnsupportedVersion.
ContextObject parse_kev(const QueryParams& query);
ContextObject parse_kev(std::string_view query);
std::string format_kev(const ContextObject& ctx);

enum class Step { kResolve, kFetch, kComplete, kApply, kRespond };
std::string_view step_name(Step step);

struct TraceEvent {
  Step step;
  std::string detail;
};
using Trace = std::function<void(const TraceEvent&)>;

class Resolver {
 public:
  Resolver(Transport& transport, const locator::PlanResolver& locator, const dip::Engine& engine)
      : transport_(transport), locator_(locator), engine_(engine) {}

  // Locate, fetch, complete, apply, respond. Multi-version referents use the
  // newest package. Throws Error: kNotFound, kServiceNotApplicable,
  // kUnknownService, kUnknownTarget, kTransformFailure, kUpstreamUnavailable.
  dip::Output resolve(const ContextObject& ctx, const Trace& trace = {}) const;

  // Every version of the referent, newest first. Throws Error(kNotFound).
  std::vector<locator::FetchPlan> versions(const std::string& referent) const;

 private:
  Transport& transport_;
  const locator::PlanResolver& locator_;
  const dip::Engine& engine_;
};

// HTTP status for a resolution failure.
int status_for(Errc code);

// One JSON object per line.
using LogSink = std::function<void(const std::string& line)>;

// Serves `?url_ver=..&rft_id=..[&svc_id=..]`; the body is the transform
// output with its MIME type. Failures are text/plain with status_for().
// `adore_versions=1` answers the version list as JSON.
Handler make_handler(const Resolver& resolver, LogSink log = {});

}  // namespace adore::openurl
