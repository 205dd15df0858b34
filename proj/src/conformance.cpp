#include "adore/conformance.hpp"

#include <chrono>
#include <map>
#include <regex>
#include <set>

#include "adore/harvest.hpp"
#include "adore/xml.hpp"

namespace adore::oai {
namespace {

constexpr std::string_view kArgs[] = {"identifier", "metadataPrefix", "from",
                                      "until",      "set",            "resumptionToken"};

// R required, O optional, X exclusive. Written independently of the engine's
// own rule table.
const std::map<std::string, std::map<std::string, char>>& legality() {
  static const std::map<std::string, std::map<std::string, char>> kTable{
      {"Identify", {}},
      {"ListMetadataFormats", {{"identifier", 'O'}}},
      {"ListSets", {{"resumptionToken", 'X'}}},
      {"GetRecord", {{"identifier", 'R'}, {"metadataPrefix", 'R'}}},
      {"ListIdentifiers",
       {{"metadataPrefix", 'R'}, {"from", 'O'}, {"until", 'O'}, {"set", 'O'},
        {"resumptionToken", 'X'}}},
      {"ListRecords",
       {{"metadataPrefix", 'R'}, {"from", 'O'}, {"until", 'O'}, {"set", 'O'},
        {"resumptionToken", 'X'}}},
  };
  return kTable;
}

struct DateValue {
  bool ok = false;
  bool day = false;
  std::int64_t first = 0;  // first second covered
};

DateValue check_date(const std::string& text) {
  static const std::regex kDay(R"((\d{4})-(\d{2})-(\d{2}))");
  static const std::regex kFull(R"((\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})Z)");
  std::smatch m;
  DateValue v;
  bool full = std::regex_match(text, m, kFull);
  if (!full && !std::regex_match(text, m, kDay)) return v;
  using namespace std::chrono;
  year_month_day ymd{year(std::stoi(m[1])), month(std::stoul(m[2])), day(std::stoul(m[3]))};
  if (!ymd.ok()) return v;
  int h = 0, mi = 0, s = 0;
  if (full) {
    h = std::stoi(m[4]);
    mi = std::stoi(m[5]);
    s = std::stoi(m[6]);
    if (h > 23 || mi > 59 || s > 59) return v;
  }
  v.ok = true;
  v.day = !full;
  v.first = duration_cast<seconds>(sys_days(ymd).time_since_epoch()).count() + h * 3600 +
            mi * 60 + s;
  return v;
}

std::optional<std::string> error_code(const std::string& body) {
  xml::Element root = xml::parse(body);
  if (root.ns != kOaiNs || root.local != "OAI-PMH")
    throw Error(Errc::kProtocolError, "not an OAI-PMH response");
  const xml::Element* err = root.first(kOaiNs, "error");
  if (!err) return std::nullopt;
  const std::string* code = err->attribute("code");
  return code ? *code : std::string("?");
}

std::string describe(const QueryParams& q) { return q.empty() ? "(empty)" : build_query(q); }

class Checker {
 public:
  Checker(const RecordSource& source, const ConformanceProbe& probe)
      : source_(source), probe_(probe) {
    transport_.route("conformance:paged",
                     make_handler(source, [] { return UtcTimestamp(0); }, {probe.page_size}));
    transport_.route("conformance:whole", make_handler(source, [] { return UtcTimestamp(0); },
                                                       {std::size_t{1} << 30}));
  }

  ConformanceReport run() {
    try {
      load_population();
      legality_matrix();
      repeated_and_empty();
      malformed_dates();
      inclusivity();
      union_property();
      error_codes();
    } catch (const std::exception& e) {
      fail(std::string("aborted: ") + e.what());
    }
    return report_;
  }

 private:
  void fail(std::string what) { report_.failures.push_back(std::move(what)); }

  void expect(bool cond, const std::string& what) {
    ++report_.checks;
    if (!cond) fail(what);
  }

  std::optional<std::string> code_for(const QueryParams& q) {
    return error_code(handle(source_, q, UtcTimestamp(0), {probe_.page_size}));
  }

  void expect_code(const QueryParams& q, std::optional<std::string> want) {
    auto got = code_for(q);
    expect(got == want, describe(q) + ": expected " + want.value_or("success") + ", got " +
                            got.value_or("success"));
  }

  // Compares only the legality codes; other in-band errors count as legal.
  void expect_legality(const QueryParams& q) {
    auto want = expected_legality(q);
    auto got = code_for(q);
    std::optional<std::string> legality_got;
    if (got == "badVerb" || got == "badArgument") legality_got = got;
    std::optional<std::string> legality_want;
    if (want) legality_want = std::string(oai_code(*want));
    expect(legality_got == legality_want,
           describe(q) + ": expected " + legality_want.value_or("legal") + ", got " +
               got.value_or("success"));
  }

  void load_population() {
    Harvester h(transport_);
    all_ = h.harvest_all("conformance:whole", {probe_.prefix, {}, {}, {}, true});
    if (all_.size() < 2) throw Error(Errc::kInvalidArgument, "source needs two or more records");
    known_ = all_.front().header.identifier;
    if (probe_.supports_sets) {
      auto sets = source_.sets();
      if (!sets.empty()) set_ = sets.front().spec;
    }
  }

  std::string value_for(std::string_view arg) {
    if (arg == "identifier") return known_;
    if (arg == "metadataPrefix") return probe_.prefix;
    if (arg == "from") return "2000-01-01T00:00:00Z";
    if (arg == "until") return "2099-12-31T23:59:59Z";
    if (arg == "set") return set_;
    return "not-a-token";
  }

  void legality_matrix() {
    std::vector<std::optional<std::string>> verbs;
    for (const auto& [v, _] : legality()) verbs.emplace_back(v);
    verbs.emplace_back("Bogus");
    verbs.emplace_back("getrecord");
    verbs.emplace_back("");
    verbs.emplace_back(std::nullopt);
    for (const auto& verb : verbs) {
      for (unsigned mask = 0; mask < 64; ++mask) {
        QueryParams q;
        if (verb) q.emplace_back("verb", *verb);
        for (unsigned i = 0; i < 6; ++i) {
          if (mask & (1u << i)) q.emplace_back(std::string(kArgs[i]), value_for(kArgs[i]));
        }
        expect_legality(q);
      }
    }
    expect_legality({{"verb", "Identify"}, {"verb", "Identify"}});
    expect_legality({{"verb", "Identify"}, {"bogus", "1"}});
  }

  void repeated_and_empty() {
    for (const auto& [verb, rules] : legality()) {
      QueryParams base{{"verb", verb}};
      for (const auto& [arg, kind] : rules) {
        if (kind == 'R') base.emplace_back(arg, value_for(arg));
      }
      for (const auto& [arg, kind] : rules) {
        QueryParams twice = base;
        twice.emplace_back(arg, value_for(arg));
        if (kind != 'R') twice.emplace_back(arg, value_for(arg));
        expect_legality(twice);
        QueryParams empty{{"verb", verb}};
        for (const auto& [a, k] : rules) {
          if (a == arg) empty.emplace_back(a, "");
          else if (k == 'R' && kind != 'X') empty.emplace_back(a, value_for(a));
        }
        expect_legality(empty);
      }
    }
  }

  void malformed_dates() {
    const char* bad[] = {"2004-13-99",           "2004-02-30",           "2003-02-29",
                         "2004-06-22T25:00:00Z", "2004-06-22T18:60:00Z", "2004-06-22T18:07:61Z",
                         "2004-06-22T18:07:18",  "2004-06-22 18:07:18Z", "20040622",
                         "2004-06-22T18:07Z",    "2004-6-22",            "yesterday",
                         "2004-06-22T18:07:18.5Z", "+2004-06-22"};
    const char* good[] = {"2004-02-29", "2004-06-22T18:07:18Z", "1999-12-31T23:59:59Z"};
    for (const char* d : bad) {
      expect_code({{"verb", "ListIdentifiers"}, {"metadataPrefix", probe_.prefix}, {"from", d}},
                  "badArgument");
      expect_code({{"verb", "ListRecords"}, {"metadataPrefix", probe_.prefix}, {"until", d}},
                  "badArgument");
    }
    for (const char* d : good)
      expect_legality({{"verb", "ListIdentifiers"}, {"metadataPrefix", probe_.prefix}, {"from", d}});
    expect_code({{"verb", "ListIdentifiers"}, {"metadataPrefix", probe_.prefix},
                 {"from", "2004-01-01"}, {"until", "2004-01-02T00:00:00Z"}},
                "badArgument");
    expect_code({{"verb", "ListIdentifiers"}, {"metadataPrefix", probe_.prefix},
                 {"from", "2004-01-02T00:00:00Z"}, {"until", "2004-01-01T00:00:00Z"}},
                "badArgument");
  }

  std::vector<std::string> window(std::optional<std::string> from, std::optional<std::string> until) {
    Harvester h(transport_);
    QueryParams q{{"verb", "ListIdentifiers"}, {"metadataPrefix", probe_.prefix}};
    if (from) q.emplace_back("from", *from);
    if (until) q.emplace_back("until", *until);
    std::vector<std::string> ids;
    std::string body = h.fetch("conformance:whole", q);
    auto code = error_code(body);
    if (code == "noRecordsMatch") return ids;
    if (code) throw Error(Errc::kProtocolError, describe(q) + ": " + *code);
    xml::Element root = xml::parse(body);
    for (const xml::Element* e : root.first(kOaiNs, "ListIdentifiers")->elements()) {
      if (e->local == "header") ids.push_back(e->first(kOaiNs, "identifier")->text());
    }
    return ids;
  }

  std::vector<std::string> brute(std::int64_t lo, std::int64_t hi) {
    std::vector<std::string> ids;
    for (const auto& r : all_) {
      auto t = r.header.datestamp.seconds();
      if (t >= lo && t <= hi) ids.push_back(r.header.identifier);
    }
    return ids;
  }

  void inclusivity() {
    constexpr std::int64_t kMin = INT64_MIN, kMax = INT64_MAX;
    std::set<std::int64_t> stamps;
    for (const auto& r : all_) stamps.insert(r.header.datestamp.seconds());
    std::vector<std::int64_t> probes(stamps.begin(), stamps.end());
    if (probes.size() > 6) probes = {probes[0], probes[1], probes[probes.size() / 2],
                                     probes[probes.size() - 2], probes.back()};
    for (std::int64_t t : probes) {
      std::string ts = UtcTimestamp(t).iso8601();
      auto from = window(ts, std::nullopt);
      expect(from == brute(t, kMax), "from=" + ts + " is not inclusive");
      auto until = window(std::nullopt, ts);
      expect(until == brute(kMin, t), "until=" + ts + " is not inclusive");
      expect(window(ts, ts) == brute(t, t), "from=until=" + ts + " misses its records");
      std::string after = (UtcTimestamp(t) + 1).iso8601();
      expect(window(after, std::nullopt) == brute(t + 1, kMax), "from=" + after + " too wide");
      std::string day = ts.substr(0, 10);
      std::int64_t day_start = check_date(day).first;
      expect(window(day, day) == brute(day_start, day_start + 86399),
             "day window " + day + " is not inclusive");
    }
  }

  void union_property() {
    Harvester h(transport_);
    for (bool headers_only : {true, false}) {
      HarvestStats stats;
      auto paged = h.harvest_all("conformance:paged", {probe_.prefix, {}, {}, {}, headers_only},
                                 &stats);
      ListPage whole = source_.list({probe_.prefix, {}, {}, {}}, "", std::size_t{1} << 30,
                                    headers_only);
      std::vector<std::string> a, b;
      std::set<std::string> seen;
      for (const auto& r : paged) {
        a.push_back(r.header.identifier);
        seen.insert(r.header.identifier);
      }
      for (const auto& r : whole.records) b.push_back(r.header.identifier);
      expect(a == b, "paged harvest differs from the unpaginated listing");
      expect(seen.size() == a.size(), "paged harvest repeats records");
      std::size_t want_pages = (b.size() + probe_.page_size - 1) / probe_.page_size;
      expect(stats.pages == want_pages, "expected " + std::to_string(want_pages) +
                                            " pages, got " + std::to_string(stats.pages));
      if (!headers_only) {
        bool same = paged.size() == whole.records.size();
        for (std::size_t i = 0; same && i < paged.size(); ++i)
          same = paged[i].metadata == strip_declaration(whole.records[i].metadata);
        expect(same, "paged metadata bytes differ from the source");
      }
    }
  }

  void error_codes() {
    const std::string unknown = "info:adore/no-such-record";
    expect_code({{"verb", "GetRecord"}, {"identifier", unknown}, {"metadataPrefix", probe_.prefix}},
                "idDoesNotExist");
    expect_code({{"verb", "GetRecord"}, {"identifier", unknown},
                 {"metadataPrefix", probe_.unsupported_prefix}},
                "idDoesNotExist");
    expect_code({{"verb", "ListMetadataFormats"}, {"identifier", unknown}}, "idDoesNotExist");
    expect_code({{"verb", "GetRecord"}, {"identifier", known_},
                 {"metadataPrefix", probe_.unsupported_prefix}},
                "cannotDisseminateFormat");
    expect_code({{"verb", "ListRecords"}, {"metadataPrefix", probe_.unsupported_prefix}},
                "cannotDisseminateFormat");
    expect_code({{"verb", "ListRecords"}, {"metadataPrefix", probe_.prefix},
                 {"from", "9999-12-31T23:59:59Z"}},
                "noRecordsMatch");
    expect_code({{"verb", "ListIdentifiers"}, {"metadataPrefix", probe_.prefix},
                 {"until", "1970-01-01T00:00:00Z"}},
                "noRecordsMatch");
    expect_code({{"verb", "ListRecords"}, {"resumptionToken", "not-a-token"}},
                "badResumptionToken");
    expect_code({{"verb", "ListSets"}, {"resumptionToken", "not-a-token"}}, "badResumptionToken");

    Harvester h(transport_);
    auto first = h.list_page("conformance:paged", {probe_.prefix, {}, {}, {}, true}, std::nullopt);
    if (first.token) {
      std::string tampered = *first.token;
      tampered[tampered.size() / 2] = tampered[tampered.size() / 2] == 'A' ? 'B' : 'A';
      expect_code({{"verb", "ListIdentifiers"}, {"resumptionToken", tampered}},
                  "badResumptionToken");
      expect_code({{"verb", "ListRecords"}, {"resumptionToken", *first.token}},
                  "badResumptionToken");
      expect_code({{"verb", "ListIdentifiers"}, {"resumptionToken", *first.token}}, std::nullopt);
    } else {
      expect(all_.size() <= probe_.page_size, "full first page without a resumptionToken");
    }

    if (probe_.supports_sets) {
      expect_code({{"verb", "ListSets"}}, std::nullopt);
      expect_code({{"verb", "ListRecords"}, {"metadataPrefix", probe_.prefix},
                   {"set", "no-such-set"}},
                  "noRecordsMatch");
    } else {
      expect_code({{"verb", "ListSets"}}, "noSetHierarchy");
      expect_code({{"verb", "ListRecords"}, {"metadataPrefix", probe_.prefix}, {"set", "any"}},
                  "noSetHierarchy");
    }

    auto rec = h.get_record("conformance:whole", known_, probe_.prefix);
    expect(rec.header.identifier == known_, "GetRecord returned another identifier");
    std::string body = h.fetch("conformance:whole", {{"verb", "GetRecord"},
                                                     {"identifier", known_},
                                                     {"metadataPrefix", probe_.prefix}});
    xml::Element root = xml::parse(body);
    const xml::Element* gr = root.first(kOaiNs, "GetRecord");
    std::size_t records = 0;
    if (gr) {
      for (const xml::Element* e : gr->elements()) records += e->local == "record";
    }
    expect(records == 1, "GetRecord must carry exactly one record");
    expect_code({{"verb", "Identify"}}, std::nullopt);
    expect_code({{"verb", "ListMetadataFormats"}}, std::nullopt);
    expect_code({{"verb", "ListMetadataFormats"}, {"identifier", known_}}, std::nullopt);
  }

  const RecordSource& source_;
  ConformanceProbe probe_;
  InProcessTransport transport_;
  ConformanceReport report_;
  std::vector<Record> all_;
  std::string known_;
  std::string set_ = "any";
};

}  // namespace

std::optional<OaiErrc> expected_legality(const QueryParams& query) {
  std::map<std::string, std::vector<std::string>> args;
  for (const auto& [k, v] : query) args[k].push_back(v);
  auto verb = args.find("verb");
  if (verb == args.end() || verb->second.size() != 1) return OaiErrc::kBadVerb;
  auto rules = legality().find(verb->second.front());
  if (rules == legality().end()) return OaiErrc::kBadVerb;
  bool exclusive = false;
  for (const auto& [k, values] : args) {
    if (k == "verb") continue;
    auto r = rules->second.find(k);
    if (r == rules->second.end() || values.size() != 1 || values.front().empty())
      return OaiErrc::kBadArgument;
    exclusive |= r->second == 'X';
  }
  if (exclusive) return args.size() == 2 ? std::nullopt : std::optional(OaiErrc::kBadArgument);
  for (const auto& [k, kind] : rules->second) {
    if (kind == 'R' && !args.count(k)) return OaiErrc::kBadArgument;
  }
  std::optional<DateValue> from, until;
  if (args.count("from")) {
    from = check_date(args["from"].front());
    if (!from->ok) return OaiErrc::kBadArgument;
  }
  if (args.count("until")) {
    until = check_date(args["until"].front());
    if (!until->ok) return OaiErrc::kBadArgument;
  }
  if (from && until && (from->day != until->day || from->first > until->first))
    return OaiErrc::kBadArgument;
  return std::nullopt;
}

ConformanceReport check_conformance(const RecordSource& source, const ConformanceProbe& probe) {
  return Checker(source, probe).run();
}

}  // namespace adore::oai
