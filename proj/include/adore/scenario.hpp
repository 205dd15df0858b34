#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adore/deployment.hpp"
#include "adore/ingest.hpp"

// End-to-end desk-scale scenario: ingest synthetic objects in batches,
// populate the locator by harvest, then resolve a random sample of package
// and content identifiers against what ingest produced.
namespace adore::scenario {

struct Options {
  std::size_t objects = 10000;
  std::size_t batch_size = 1000;
  std::size_t resolves = 1000;
  std::uint32_t seed = 1;
};

struct Stats {
  std::size_t objects = 0;
  std::size_t tapes = 0;
  std::size_t arc_records = 0;
  std::size_t inline_datastreams = 0;
  std::size_t package_rows = 0;
  std::size_t content_rows = 0;
  std::size_t resolves = 0;
  std::size_t resolved_ok = 0;
  std::vector<std::string> failures;
  double ingest_seconds = 0;
  double populate_seconds = 0;
  double resolve_seconds = 0;
  bool ok() const { return failures.empty() && resolved_ok == resolves; }
};

// Object `n` of a seeded synthetic collection: an object content id, one
// inline MARCXML-like record with its own content id and, for roughly half
// the objects, a binary datastream.
ingest::ObjectManifest synthetic_object(std::uint32_t seed, std::size_t n,
                                        std::string_view ns);

Stats run(deploy::Deployment& deployment, const Options& options);

std::string format(const Stats& stats);

}  // namespace adore::scenario
