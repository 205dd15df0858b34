#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "adore/timestamp.hpp"

// ARC version 1 container files for binary datastreams, with a sidecar
// offset index. A store is a directory of `arc-NNNNN.arc` files plus
// `index.tsv`; the index can always be rebuilt from the files alone.
namespace adore::arc {

struct ArcRecord {
  std::string url_key;
  std::string ip = "0.0.0.0";
  std::string archive_date;  // 14 digits
  std::string content_type;
  std::string payload;
};

struct IndexEntry {
  std::string url_key;
  std::string file_name;
  std::uint64_t byte_offset = 0;
  std::uint64_t record_length = 0;  // header line + payload + separator
  bool operator==(const IndexEntry&) const = default;
};

struct StoreOptions {
  // Prefix for minted keys; keys are `<key_prefix>/<uuid>`.
  std::string key_prefix = "info:local-repo/ds";
  // A new file is started once the current one reaches this size.
  std::uint64_t max_file_bytes = 256ull << 20;
};

class ArcStore {
 public:
  // Opens (creating if needed) the store rooted at `dir`.
  static std::unique_ptr<ArcStore> open(const std::string& dir,
                                        StoreOptions options, Clock clock);

  // Appends one record and returns its key. Throws Error(kIoFailure).
  std::string write(std::string_view payload, std::string_view mime);

  struct Payload {
    std::string bytes;
    std::string mime;
  };
  // Throws Error: kUnknownKey, kCorruptRecord.
  Payload read(std::string_view url_key) const;
  bool contains(std::string_view url_key) const;

  // In append order.
  std::vector<IndexEntry> index() const;
  std::size_t size() const;
  const std::string& dir() const { return dir_; }

  // Sequential scan of every file, independent of the index. Throws
  // Error(kCorruptRecord) on a malformed or truncated record.
  std::vector<ArcRecord> scan() const;
  std::vector<IndexEntry> scan_index() const;

  // Replaces the sidecar with the result of a full scan.
  void rebuild_index();

 private:
  ArcStore(std::string dir, StoreOptions options, Clock clock);
  void load_index();
  void start_file();
  std::string path_of(const std::string& file_name) const;

  std::string dir_;
  StoreOptions options_;
  Clock clock_;

  mutable std::shared_mutex mu_;
  std::vector<IndexEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> by_key_;
  std::string current_file_;
  std::uint64_t current_size_ = 0;
  int file_counter_ = 0;
};

// Parses a record header line (without its newline). The content type may
// contain spaces, so fields are taken from both ends.
bool parse_header(std::string_view line, ArcRecord& out, std::uint64_t& length);
std::string format_header(const ArcRecord& r, std::uint64_t length);

}  // namespace adore::arc
