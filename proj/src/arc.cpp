#include "adore/arc.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "adore/error.hpp"
#include "adore/util.hpp"

namespace adore::arc {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kIndexFile = "index.tsv";
constexpr std::string_view kVersionBody =
    "1 0 adore\nURL IP-address Archive-date Content-type Archive-length\n";

std::string file_name_for(int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "arc-%05d.arc", n);
  return buf;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty() || s.size() > 19) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

std::string index_line(const IndexEntry& e) {
  return escape_field(e.url_key) + "\t" + e.file_name + "\t" +
         std::to_string(e.byte_offset) + "\t" + std::to_string(e.record_length) +
         "\n";
}

void append_bytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(Errc::kIoFailure, "cannot append to " + path);
}

// Reads records sequentially from one file, starting after the version
// block. Calls `visit(entry, record)` for each.
template <typename Visit>
void scan_file(const std::string& path, const std::string& file_name,
               Visit&& visit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path);
  std::uint64_t offset = 0;
  bool first = true;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      throw Error(Errc::kCorruptRecord, path + ": empty header at offset " +
                                            std::to_string(offset));
    }
    ArcRecord rec;
    std::uint64_t length = 0;
    if (!parse_header(line, rec, length))
      throw Error(Errc::kCorruptRecord,
                  path + ": bad header at offset " + std::to_string(offset));
    std::string payload(length, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(length));
    char sep = 0;
    if (static_cast<std::uint64_t>(in.gcount()) != length || !in.get(sep) ||
        sep != '\n')
      throw Error(Errc::kCorruptRecord,
                  path + ": truncated record at offset " + std::to_string(offset));
    std::uint64_t record_length = line.size() + 1 + length + 1;
    if (first) {
      if (!rec.url_key.starts_with("filedesc://"))
        throw Error(Errc::kCorruptRecord, path + ": missing version block");
      first = false;
    } else {
      rec.payload = std::move(payload);
      visit(IndexEntry{rec.url_key, file_name, offset, record_length}, rec);
    }
    offset += record_length;
  }
}

std::vector<std::string> arc_files(const std::string& dir) {
  std::vector<std::string> names;
  for (const auto& f : fs::directory_iterator(dir)) {
    std::string name = f.path().filename().string();
    if (name.starts_with("arc-") && name.ends_with(".arc")) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string version_block(const std::string& file_name,
                          const std::string& archive_date) {
  ArcRecord desc;
  desc.url_key = "filedesc://" + file_name;
  desc.archive_date = archive_date;
  desc.content_type = "text/plain";
  std::string block = format_header(desc, kVersionBody.size());
  block += kVersionBody;
  block += "\n";
  return block;
}

}  // namespace

bool parse_header(std::string_view line, ArcRecord& out, std::uint64_t& length) {
  std::vector<std::string_view> head;
  size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    size_t sp = line.find(' ', pos);
    if (sp == std::string_view::npos) return false;
    head.push_back(line.substr(pos, sp - pos));
    pos = sp + 1;
  }
  size_t last = line.rfind(' ');
  if (last == std::string_view::npos || last < pos) return false;
  if (!parse_u64(line.substr(last + 1), length)) return false;
  out.url_key = std::string(head[0]);
  out.ip = std::string(head[1]);
  out.archive_date = std::string(head[2]);
  out.content_type = last > pos ? std::string(line.substr(pos, last - pos)) : "";
  return !out.url_key.empty() && out.archive_date.size() == 14;
}

std::string format_header(const ArcRecord& r, std::uint64_t length) {
  std::string mime = r.content_type.empty() ? "application/octet-stream"
                                            : r.content_type;
  for (char& c : mime) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return r.url_key + " " + r.ip + " " + r.archive_date + " " + mime + " " +
         std::to_string(length) + "\n";
}

ArcStore::ArcStore(std::string dir, StoreOptions options, Clock clock)
    : dir_(std::move(dir)), options_(std::move(options)), clock_(std::move(clock)) {}

std::unique_ptr<ArcStore> ArcStore::open(const std::string& dir,
                                         StoreOptions options, Clock clock) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIoFailure, "cannot create " + dir + ": " + ec.message());
  std::unique_ptr<ArcStore> store(
      new ArcStore(dir, std::move(options), std::move(clock)));
  store->load_index();
  return store;
}

std::string ArcStore::path_of(const std::string& file_name) const {
  return (fs::path(dir_) / file_name).string();
}

void ArcStore::load_index() {
  std::string index_path = path_of(std::string(kIndexFile));
  auto files = arc_files(dir_);
  bool usable = fs::exists(index_path);
  if (usable) {
    std::ifstream in(index_path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      auto f = split(line, '\t');
      IndexEntry e;
      if (f.size() != 4 || !parse_u64(f[2], e.byte_offset) ||
          !parse_u64(f[3], e.record_length)) {
        usable = false;
        break;
      }
      e.url_key = unescape_field(f[0]);
      e.file_name = f[1];
      by_key_[e.url_key] = entries_.size();
      entries_.push_back(std::move(e));
    }
    // The sidecar is written after the data; a tail it does not cover means
    // the last run stopped in between.
    std::map<std::string, std::uint64_t> ends;
    for (const auto& e : entries_)
      ends[e.file_name] = std::max(ends[e.file_name], e.byte_offset + e.record_length);
    for (const auto& name : files) {
      auto size = fs::file_size(path_of(name));
      auto it = ends.find(name);
      std::uint64_t expected =
          it != ends.end() ? it->second : version_block(name, "00000000000000").size();
      if (size != expected) usable = false;
    }
  }
  if (!usable) {
    entries_.clear();
    by_key_.clear();
    if (!files.empty()) {
      rebuild_index();
      return;
    }
  }
  if (!files.empty()) {
    current_file_ = files.back();
    current_size_ = fs::file_size(path_of(current_file_));
    file_counter_ = std::stoi(current_file_.substr(4, 5)) + 1;
  }
}

void ArcStore::start_file() {
  current_file_ = file_name_for(file_counter_++);
  std::string block = version_block(current_file_, clock_().compact());
  append_bytes(path_of(current_file_), block);
  current_size_ = block.size();
}

std::string ArcStore::write(std::string_view payload, std::string_view mime) {
  std::unique_lock lock(mu_);
  if (current_file_.empty() || current_size_ >= options_.max_file_bytes)
    start_file();
  ArcRecord rec;
  rec.url_key = options_.key_prefix + "/" + random_uuid();
  rec.archive_date = clock_().compact();
  rec.content_type = std::string(mime);
  std::string bytes = format_header(rec, payload.size());
  bytes.append(payload);
  bytes.push_back('\n');
  append_bytes(path_of(current_file_), bytes);
  IndexEntry e{rec.url_key, current_file_, current_size_, bytes.size()};
  current_size_ += bytes.size();
  append_bytes(path_of(std::string(kIndexFile)), index_line(e));
  by_key_[e.url_key] = entries_.size();
  entries_.push_back(std::move(e));
  return rec.url_key;
}

bool ArcStore::contains(std::string_view url_key) const {
  std::shared_lock lock(mu_);
  return by_key_.find(url_key) != by_key_.end();
}

ArcStore::Payload ArcStore::read(std::string_view url_key) const {
  IndexEntry e;
  {
    std::shared_lock lock(mu_);
    auto it = by_key_.find(url_key);
    if (it == by_key_.end())
      throw Error(Errc::kUnknownKey, "no ARC record " + std::string(url_key));
    e = entries_[it->second];
  }
  std::ifstream in(path_of(e.file_name), std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + e.file_name);
  in.seekg(static_cast<std::streamoff>(e.byte_offset));
  std::string raw(e.record_length, '\0');
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  auto got = static_cast<std::uint64_t>(in.gcount());
  auto corrupt = [&](const std::string& why) {
    return Error(Errc::kCorruptRecord, std::string(url_key) + ": " + why);
  };
  if (got != e.record_length) throw corrupt("record truncated");
  size_t nl = raw.find('\n');
  ArcRecord rec;
  std::uint64_t length = 0;
  if (nl == std::string::npos || !parse_header(std::string_view(raw).substr(0, nl), rec, length))
    throw corrupt("bad header");
  if (rec.url_key != url_key) throw corrupt("header names " + rec.url_key);
  if (nl + 1 + length + 1 != e.record_length || raw.back() != '\n')
    throw corrupt("declared length " + std::to_string(length) +
                  " does not match the record");
  return {raw.substr(nl + 1, length), rec.content_type};
}

std::vector<IndexEntry> ArcStore::index() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::size_t ArcStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<ArcRecord> ArcStore::scan() const {
  std::vector<ArcRecord> out;
  for (const auto& name : arc_files(dir_)) {
    scan_file(path_of(name), name,
              [&](const IndexEntry&, ArcRecord& rec) { out.push_back(std::move(rec)); });
  }
  return out;
}

std::vector<IndexEntry> ArcStore::scan_index() const {
  std::vector<IndexEntry> out;
  for (const auto& name : arc_files(dir_)) {
    scan_file(path_of(name), name,
              [&](const IndexEntry& e, ArcRecord&) { out.push_back(e); });
  }
  return out;
}

void ArcStore::rebuild_index() {
  std::vector<IndexEntry> scanned = scan_index();
  std::string text;
  for (const auto& e : scanned) text += index_line(e);
  write_file(path_of(std::string(kIndexFile)), text);
  std::unique_lock lock(mu_);
  entries_ = std::move(scanned);
  by_key_.clear();
  for (size_t i = 0; i < entries_.size(); ++i) by_key_[entries_[i].url_key] = i;
  auto files = arc_files(dir_);
  if (!files.empty()) {
    current_file_ = files.back();
    current_size_ = fs::file_size(path_of(current_file_));
    file_counter_ = std::stoi(current_file_.substr(4, 5)) + 1;
  }
}

}  // namespace adore::arc
