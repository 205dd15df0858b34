#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "adore/didl.hpp"
#include "adore/timestamp.hpp"

// XMLtape: one XML file concatenating a batch of DIDL documents, each
// wrapped with its identifier and datestamp, plus a `<tape>.idx` sidecar of
// byte ranges. Tapes only grow until sealed and are read-only afterwards.
namespace adore::tape {

inline constexpr std::string_view kTapeNs = "urn:adore:xmltape:1";

struct TapeRecord {
  std::string package_id;
  UtcTimestamp datestamp;
  std::string didl_bytes;
};

struct IndexEntry {
  std::string package_id;
  std::uint64_t byte_offset = 0;  // of the embedded DIDL root
  std::uint64_t length = 0;
  UtcTimestamp datestamp;
  std::uint64_t seq = 0;  // append position
  bool operator==(const IndexEntry&) const = default;
};

// Position in datestamp order; records sort by (datestamp, seq).
struct Cursor {
  UtcTimestamp datestamp;
  std::uint64_t seq = 0;
};

class Tape {
 public:
  // Throws Error(kIoFailure) if the file already exists.
  static std::unique_ptr<Tape> create(const std::string& path);
  // Loads the sidecar, rebuilding it from the tape when absent or stale.
  static std::unique_ptr<Tape> open(const std::string& path);

  // Throws Error: kDuplicatePackageId, kTapeSealed, kIoFailure.
  void append(const didl::DidlDocument& doc);
  // Throws Error(kIoFailure).
  void seal();
  bool sealed() const;

  // Throws Error(kUnknownPackageId).
  TapeRecord get(std::string_view package_id) const;
  bool contains(std::string_view package_id) const;
  TapeRecord read(const IndexEntry& entry) const;

  // Inclusive bounds, ascending datestamp, append order within a second.
  // Throws Error(kBadRange) when from > until.
  std::vector<TapeRecord> list(std::optional<UtcTimestamp> from,
                               std::optional<UtcTimestamp> until) const;
  // Same order; entries strictly after `after` when given, at most `limit`.
  std::vector<IndexEntry> select(std::optional<UtcTimestamp> from,
                                 std::optional<UtcTimestamp> until,
                                 std::optional<Cursor> after,
                                 std::size_t limit) const;

  // Append order.
  std::vector<IndexEntry> entries() const;
  std::size_t size() const;
  std::optional<UtcTimestamp> earliest() const;
  const std::string& path() const { return path_; }

  static std::string index_path(const std::string& tape_path);
  // Streaming parse of the tape file alone. Throws Error(kMalformedXml).
  static std::vector<IndexEntry> scan(const std::string& tape_path);
  static std::vector<TapeRecord> scan_records(const std::string& tape_path);

 private:
  explicit Tape(std::string path) : path_(std::move(path)) {}
  void add_entry(IndexEntry e);
  void write_index() const;

  std::string path_;
  mutable std::shared_mutex mu_;
  bool sealed_ = false;
  std::uint64_t file_size_ = 0;
  std::vector<IndexEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<std::size_t> by_date_;  // into entries_, sorted by (datestamp, seq)
};

}  // namespace adore::tape
