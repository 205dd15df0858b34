#include "adore/tape.hpp"

#include <expat.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "adore/error.hpp"
#include "adore/util.hpp"
#include "adore/xml.hpp"

namespace adore::tape {
namespace {

namespace fs = std::filesystem;

const std::string kHeader = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<xt:tape xmlns:xt=\"" +
                            std::string(kTapeNs) + "\">\n";
constexpr std::string_view kRecordClose = "</xt:tape-record>\n";
constexpr std::string_view kSeal = "</xt:tape>\n";

bool before(const IndexEntry& a, const IndexEntry& b) {
  if (a.datestamp != b.datestamp) return a.datestamp < b.datestamp;
  return a.seq < b.seq;
}

std::string index_line(const IndexEntry& e) {
  return escape_field(e.package_id) + "\t" + std::to_string(e.byte_offset) +
         "\t" + std::to_string(e.length) + "\t" +
         std::to_string(e.datestamp.seconds()) + "\n";
}

bool ends_sealed(const std::string& path, std::uint64_t size) {
  if (size < kSeal.size()) return false;
  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(size - kSeal.size()));
  std::string tail(kSeal.size(), '\0');
  in.read(tail.data(), static_cast<std::streamsize>(tail.size()));
  return tail == kSeal;
}

void append_to(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(Errc::kIoFailure, "cannot append to " + path);
}

struct ScanState {
  XML_Parser parser = nullptr;
  int depth = 0;
  std::string field;  // admin child being read
  std::string identifier;
  std::string datestamp;
  std::uint64_t begin = 0;
  bool in_admin = false;
  std::vector<IndexEntry> out;
  std::string error;
};

void XMLCALL scan_start(void* data, const XML_Char* name, const XML_Char**) {
  auto* st = static_cast<ScanState*>(data);
  ++st->depth;
  std::string_view n = name;
  if (st->depth == 1 && n != "xt:tape") st->error = "root is not xt:tape";
  if (st->depth == 2 && n != "xt:tape-record") st->error = "unexpected <" + std::string(n) + ">";
  if (st->depth == 3) {
    if (n == "xt:tape-admin") {
      st->in_admin = true;
    } else {
      st->begin = static_cast<std::uint64_t>(XML_GetCurrentByteIndex(st->parser));
    }
  }
  if (st->depth == 4 && st->in_admin) {
    st->field = n;
    if (n == "xt:identifier") st->identifier.clear();
    if (n == "xt:datestamp") st->datestamp.clear();
  }
  if (!st->error.empty()) XML_StopParser(st->parser, XML_FALSE);
}

void XMLCALL scan_end(void* data, const XML_Char* name) {
  auto* st = static_cast<ScanState*>(data);
  std::string_view n = name;
  if (st->depth == 4) st->field.clear();
  if (st->depth == 3) {
    if (n == "xt:tape-admin") {
      st->in_admin = false;
    } else {
      auto end = static_cast<std::uint64_t>(XML_GetCurrentByteIndex(st->parser) +
                                            XML_GetCurrentByteCount(st->parser));
      auto ts = UtcTimestamp::parse_iso8601(trim(st->datestamp));
      if (!ts) {
        st->error = "bad datestamp '" + st->datestamp + "'";
        XML_StopParser(st->parser, XML_FALSE);
      } else {
        st->out.push_back(IndexEntry{std::string(trim(st->identifier)), st->begin,
                                     end - st->begin, *ts, st->out.size()});
      }
    }
  }
  --st->depth;
}

void XMLCALL scan_chars(void* data, const XML_Char* s, int len) {
  auto* st = static_cast<ScanState*>(data);
  if (st->depth != 4 || !st->in_admin) return;
  if (st->field == "xt:identifier") st->identifier.append(s, static_cast<size_t>(len));
  if (st->field == "xt:datestamp") st->datestamp.append(s, static_cast<size_t>(len));
}

}  // namespace

std::string Tape::index_path(const std::string& tape_path) {
  return tape_path + ".idx";
}

std::unique_ptr<Tape> Tape::create(const std::string& path) {
  if (fs::exists(path)) throw Error(Errc::kIoFailure, path + " already exists");
  if (auto parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_file(path, kHeader);
  write_file(index_path(path), "");
  std::unique_ptr<Tape> t(new Tape(path));
  t->file_size_ = kHeader.size();
  return t;
}

std::unique_ptr<Tape> Tape::open(const std::string& path) {
  if (!fs::exists(path)) throw Error(Errc::kIoFailure, "no tape at " + path);
  std::unique_ptr<Tape> t(new Tape(path));
  t->file_size_ = fs::file_size(path);
  t->sealed_ = ends_sealed(path, t->file_size_);

  std::vector<IndexEntry> loaded;
  bool usable = fs::exists(index_path(path));
  if (usable) {
    std::ifstream in(index_path(path), std::ios::binary);
    std::string line;
    while (usable && std::getline(in, line)) {
      auto f = split(line, '\t');
      if (f.size() != 4) {
        usable = false;
        break;
      }
      try {
        loaded.push_back(IndexEntry{unescape_field(f[0]), std::stoull(f[1]),
                                    std::stoull(f[2]),
                                    UtcTimestamp(std::stoll(f[3])), loaded.size()});
      } catch (const std::exception&) {
        usable = false;
      }
    }
  }
  if (usable) {
    std::uint64_t expected =
        loaded.empty() ? kHeader.size()
                       : loaded.back().byte_offset + loaded.back().length + kRecordClose.size();
    if (t->sealed_) expected += kSeal.size();
    usable = expected == t->file_size_;
  }
  if (!usable) loaded = scan(path);
  for (auto& e : loaded) t->add_entry(std::move(e));
  if (!usable) t->write_index();
  return t;
}

void Tape::add_entry(IndexEntry e) {
  if (entries_.size() != e.seq) e.seq = entries_.size();
  by_id_[e.package_id] = entries_.size();
  entries_.push_back(std::move(e));
  std::size_t pos = entries_.size() - 1;
  auto it = std::upper_bound(by_date_.begin(), by_date_.end(), pos,
                             [&](std::size_t a, std::size_t b) {
                               return before(entries_[a], entries_[b]);
                             });
  by_date_.insert(it, pos);
}

void Tape::write_index() const {
  std::string text;
  for (const auto& e : entries_) text += index_line(e);
  write_file(index_path(path_), text);
}

void Tape::append(const didl::DidlDocument& doc) {
  const std::string& id = doc.package_id().base;
  std::string body = didl::serialize_didl(doc, false);
  std::unique_lock lock(mu_);
  if (sealed_) throw Error(Errc::kTapeSealed, path_ + " is sealed");
  if (by_id_.count(id)) throw Error(Errc::kDuplicatePackageId, id + " already on tape");
  std::string prefix = "<xt:tape-record><xt:tape-admin><xt:identifier>" +
                       xml::escape_text(id) + "</xt:identifier><xt:datestamp>" +
                       doc.created().iso8601() +
                       "</xt:datestamp></xt:tape-admin>";
  IndexEntry e{id, file_size_ + prefix.size(), body.size(), doc.created(),
               entries_.size()};
  std::string bytes = prefix + body + std::string(kRecordClose);
  append_to(path_, bytes);
  file_size_ += bytes.size();
  append_to(index_path(path_), index_line(e));
  add_entry(std::move(e));
}

void Tape::seal() {
  std::unique_lock lock(mu_);
  if (sealed_) return;
  append_to(path_, kSeal);
  file_size_ += kSeal.size();
  sealed_ = true;
}

bool Tape::sealed() const {
  std::shared_lock lock(mu_);
  return sealed_;
}

bool Tape::contains(std::string_view package_id) const {
  std::shared_lock lock(mu_);
  return by_id_.find(package_id) != by_id_.end();
}

TapeRecord Tape::read(const IndexEntry& e) const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path_);
  in.seekg(static_cast<std::streamoff>(e.byte_offset));
  std::string bytes(e.length, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != e.length)
    throw Error(Errc::kIoFailure, path_ + ": short read for " + e.package_id);
  return {e.package_id, e.datestamp, std::move(bytes)};
}

TapeRecord Tape::get(std::string_view package_id) const {
  IndexEntry e;
  {
    std::shared_lock lock(mu_);
    auto it = by_id_.find(package_id);
    if (it == by_id_.end())
      throw Error(Errc::kUnknownPackageId,
                  std::string(package_id) + " is not on " + path_);
    e = entries_[it->second];
  }
  return read(e);
}

std::vector<IndexEntry> Tape::select(std::optional<UtcTimestamp> from,
                                     std::optional<UtcTimestamp> until,
                                     std::optional<Cursor> after,
                                     std::size_t limit) const {
  if (from && until && *from > *until)
    throw Error(Errc::kBadRange, "from " + from->iso8601() + " is after until " +
                                     until->iso8601());
  std::shared_lock lock(mu_);
  auto it = by_date_.begin();
  if (from) {
    it = std::lower_bound(by_date_.begin(), by_date_.end(), *from,
                          [&](std::size_t i, UtcTimestamp t) {
                            return entries_[i].datestamp < t;
                          });
  }
  if (after) {
    IndexEntry probe;
    probe.datestamp = after->datestamp;
    probe.seq = after->seq;
    auto past = std::upper_bound(by_date_.begin(), by_date_.end(), probe,
                                 [&](const IndexEntry& p, std::size_t i) {
                                   return before(p, entries_[i]);
                                 });
    it = std::max(it, past);
  }
  std::vector<IndexEntry> out;
  for (; it != by_date_.end() && out.size() < limit; ++it) {
    const IndexEntry& e = entries_[*it];
    if (until && e.datestamp > *until) break;
    out.push_back(e);
  }
  return out;
}

std::vector<TapeRecord> Tape::list(std::optional<UtcTimestamp> from,
                                   std::optional<UtcTimestamp> until) const {
  std::vector<TapeRecord> out;
  for (const auto& e : select(from, until, std::nullopt, SIZE_MAX))
    out.push_back(read(e));
  return out;
}

std::vector<IndexEntry> Tape::entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::size_t Tape::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::optional<UtcTimestamp> Tape::earliest() const {
  std::shared_lock lock(mu_);
  if (by_date_.empty()) return std::nullopt;
  return entries_[by_date_.front()].datestamp;
}

std::vector<IndexEntry> Tape::scan(const std::string& tape_path) {
  std::ifstream in(tape_path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + tape_path);
  auto size = fs::file_size(tape_path);
  bool sealed = ends_sealed(tape_path, size);

  ScanState st;
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)>
      parser(XML_ParserCreate(nullptr), &XML_ParserFree);
  st.parser = parser.get();
  XML_SetUserData(st.parser, &st);
  XML_SetElementHandler(st.parser, scan_start, scan_end);
  XML_SetCharacterDataHandler(st.parser, scan_chars);

  auto fail = [&] {
    std::string message = st.error.empty()
                              ? XML_ErrorString(XML_GetErrorCode(st.parser))
                              : st.error;
    throw Error(Errc::kMalformedXml, tape_path + ": " + message + " at line " +
                                         std::to_string(XML_GetCurrentLineNumber(st.parser)));
  };
  std::string chunk(1 << 20, '\0');
  while (in) {
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    auto got = static_cast<int>(in.gcount());
    if (got == 0) break;
    if (XML_Parse(st.parser, chunk.data(), got, XML_FALSE) != XML_STATUS_OK) fail();
  }
  // An open tape lacks only its closing tag.
  std::string_view tail = sealed ? "" : "</xt:tape>";
  if (XML_Parse(st.parser, tail.data(), static_cast<int>(tail.size()), XML_TRUE) !=
      XML_STATUS_OK)
    fail();
  return std::move(st.out);
}

std::vector<TapeRecord> Tape::scan_records(const std::string& tape_path) {
  std::vector<TapeRecord> out;
  std::ifstream in(tape_path, std::ios::binary);
  for (const auto& e : scan(tape_path)) {
    in.seekg(static_cast<std::streamoff>(e.byte_offset));
    std::string bytes(e.length, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.push_back({e.package_id, e.datestamp, std::move(bytes)});
  }
  return out;
}

}  // namespace adore::tape
