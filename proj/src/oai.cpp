#include "adore/oai.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "adore/xml.hpp"

namespace adore::oai {
namespace {

constexpr std::array<std::pair<Verb, std::string_view>, 6> kVerbs{{
    {Verb::kIdentify, "Identify"},
    {Verb::kListMetadataFormats, "ListMetadataFormats"},
    {Verb::kListSets, "ListSets"},
    {Verb::kListIdentifiers, "ListIdentifiers"},
    {Verb::kListRecords, "ListRecords"},
    {Verb::kGetRecord, "GetRecord"},
}};

struct ArgRule {
  std::set<std::string_view> allowed;
  std::set<std::string_view> required;
  bool token = false;  // resumptionToken accepted (exclusively)
};

const ArgRule& rule_for(Verb verb) {
  static const std::map<Verb, ArgRule> kRules{
      {Verb::kIdentify, {{}, {}, false}},
      {Verb::kListMetadataFormats, {{"identifier"}, {}, false}},
      {Verb::kListSets, {{}, {}, true}},
      {Verb::kGetRecord, {{"identifier", "metadataPrefix"}, {"identifier", "metadataPrefix"}, false}},
      {Verb::kListIdentifiers, {{"metadataPrefix", "from", "until", "set"}, {"metadataPrefix"}, true}},
      {Verb::kListRecords, {{"metadataPrefix", "from", "until", "set"}, {"metadataPrefix"}, true}},
  };
  return kRules.at(verb);
}

std::string base64url(std::string_view bytes) {
  std::string s = base64_encode(bytes);
  for (char& c : s) {
    if (c == '+') c = '-';
    if (c == '/') c = '_';
  }
  while (!s.empty() && s.back() == '=') s.pop_back();
  return s;
}

std::optional<std::string> unbase64url(std::string_view text) {
  std::string s(text);
  for (char& c : s) {
    if (c == '-') {
      c = '+';
    } else if (c == '_') {
      c = '/';
    } else if (c == '+' || c == '/' || c == '=') {
      return std::nullopt;
    }
  }
  while (s.size() % 4) s.push_back('=');
  return base64_decode(s);
}

std::string opt_time(const std::optional<UtcTimestamp>& t) {
  return t ? std::to_string(t->seconds()) : "";
}

std::string token_payload(const TokenState& s) {
  std::vector<std::string> f{"1",
                             std::string(verb_name(s.verb)),
                             s.cursor,
                             s.query.prefix,
                             opt_time(s.query.from),
                             opt_time(s.query.until),
                             s.query.set ? "s" + *s.query.set : "",
                             std::to_string(s.page_size),
                             std::to_string(s.delivered)};
  std::string out;
  for (size_t i = 0; i < f.size(); ++i) {
    if (i) out.push_back('\t');
    out += escape_field(f[i]);
  }
  return out;
}

std::string seal(std::string_view payload) {
  return sha256_hex(std::string("adore-token\n") + std::string(payload)).substr(0, 20);
}

void open_response(std::string& out, UtcTimestamp now, const std::string& base_url,
                   const QueryParams* echo) {
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\" "
         "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
         "xsi:schemaLocation=\"http://www.openarchives.org/OAI/2.0/ "
         "http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd\">\n";
  out += "<responseDate>" + now.iso8601() + "</responseDate>\n<request";
  if (echo) {
    for (const auto& [k, v] : *echo)
      out += " " + k + "=\"" + xml::escape_attribute(v) + "\"";
  }
  out += ">" + xml::escape_text(base_url) + "</request>\n";
}

void close_response(std::string& out) { out += "</OAI-PMH>\n"; }

std::string error_body(OaiErrc code, std::string_view message) {
  return "<error code=\"" + std::string(oai_code(code)) + "\">" +
         xml::escape_text(message) + "</error>\n";
}

void write_header(std::string& out, const Header& h) {
  out += "<header><identifier>" + xml::escape_text(h.identifier) +
         "</identifier><datestamp>" + h.datestamp.iso8601() + "</datestamp>";
  for (const auto& s : h.sets) out += "<setSpec>" + xml::escape_text(s) + "</setSpec>";
  out += "</header>";
}

void write_record(std::string& out, const Record& r) {
  out += "<record>";
  write_header(out, r.header);
  out += "<metadata>";
  out += strip_declaration(r.metadata);
  out += "</metadata></record>\n";
}

std::string list_body(const RecordSource& source, const OaiRequest& req,
                      const EngineOptions& options) {
  bool headers_only = req.verb == Verb::kListIdentifiers;
  TokenState state;
  if (req.resumption_token) {
    state = decode_token(*req.resumption_token);
    if (state.verb != req.verb)
      throw OaiError(OaiErrc::kBadResumptionToken, "token was issued for another verb");
  } else {
    state.verb = req.verb;
    state.query = ListQuery{*req.metadata_prefix, req.from, req.until, req.set};
    state.page_size = options.page_size;
  }
  ListPage page = source.list(state.query, state.cursor, std::max<size_t>(state.page_size, 1),
                              headers_only);
  if (page.records.empty())
    throw OaiError(OaiErrc::kNoRecordsMatch, "no records match the request");
  std::string element(verb_name(req.verb));
  std::string out = "<" + element + ">\n";
  for (const auto& r : page.records) {
    if (headers_only) {
      write_header(out, r.header);
      out.push_back('\n');
    } else {
      write_record(out, r);
    }
  }
  std::string attrs = " cursor=\"" + std::to_string(state.delivered) + "\"";
  if (page.complete_list_size)
    attrs += " completeListSize=\"" + std::to_string(*page.complete_list_size) + "\"";
  if (page.next_cursor) {
    TokenState next = state;
    next.cursor = *page.next_cursor;
    next.delivered = state.delivered + page.records.size();
    out += "<resumptionToken" + attrs + ">" + encode_token(next) + "</resumptionToken>\n";
  } else if (req.resumption_token) {
    out += "<resumptionToken" + attrs + "/>\n";
  }
  out += "</" + element + ">\n";
  return out;
}

std::string verb_body(const RecordSource& source, const OaiRequest& req,
                      const EngineOptions& options) {
  switch (req.verb) {
    case Verb::kIdentify: {
      Identity id = source.identify();
      std::string out = "<Identify>\n<repositoryName>" + xml::escape_text(id.repository_name) +
                        "</repositoryName>\n<baseURL>" + xml::escape_text(id.base_url) +
                        "</baseURL>\n<protocolVersion>2.0</protocolVersion>\n<adminEmail>" +
                        xml::escape_text(id.admin_email) + "</adminEmail>\n<earliestDatestamp>" +
                        id.earliest_datestamp.iso8601() + "</earliestDatestamp>\n<deletedRecord>" +
                        id.deleted_record + "</deletedRecord>\n<granularity>" +
                        std::string(kGranularity) + "</granularity>\n";
      for (const auto& d : id.descriptions) out += "<description>" + d + "</description>\n";
      return out + "</Identify>\n";
    }
    case Verb::kListMetadataFormats: {
      auto formats = source.formats(req.identifier);
      if (formats.empty())
        throw OaiError(OaiErrc::kNoMetadataFormats, "no metadata formats available");
      std::string out = "<ListMetadataFormats>\n";
      for (const auto& f : formats) {
        out += "<metadataFormat><metadataPrefix>" + xml::escape_text(f.prefix) +
               "</metadataPrefix><schema>" + xml::escape_text(f.schema) +
               "</schema><metadataNamespace>" + xml::escape_text(f.ns) +
               "</metadataNamespace></metadataFormat>\n";
      }
      return out + "</ListMetadataFormats>\n";
    }
    case Verb::kListSets: {
      if (req.resumption_token)
        throw OaiError(OaiErrc::kBadResumptionToken, "set lists are never split");
      auto sets = source.sets();
      if (sets.empty()) throw OaiError(OaiErrc::kNoSetHierarchy, "no sets defined");
      std::string out = "<ListSets>\n";
      for (const auto& s : sets) {
        out += "<set><setSpec>" + xml::escape_text(s.spec) + "</setSpec><setName>" +
               xml::escape_text(s.name) + "</setName></set>\n";
      }
      return out + "</ListSets>\n";
    }
    case Verb::kGetRecord: {
      Record r = source.get(*req.identifier, *req.metadata_prefix);
      std::string out = "<GetRecord>";
      write_record(out, r);
      return out + "</GetRecord>\n";
    }
    case Verb::kListIdentifiers:
    case Verb::kListRecords:
      return list_body(source, req, options);
  }
  return {};
}

}  // namespace

std::string_view oai_code(OaiErrc code) {
  switch (code) {
    case OaiErrc::kBadVerb: return "badVerb";
    case OaiErrc::kBadArgument: return "badArgument";
    case OaiErrc::kBadResumptionToken: return "badResumptionToken";
    case OaiErrc::kCannotDisseminateFormat: return "cannotDisseminateFormat";
    case OaiErrc::kIdDoesNotExist: return "idDoesNotExist";
    case OaiErrc::kNoRecordsMatch: return "noRecordsMatch";
    case OaiErrc::kNoMetadataFormats: return "noMetadataFormats";
    case OaiErrc::kNoSetHierarchy: return "noSetHierarchy";
  }
  return "badArgument";
}

std::optional<OaiErrc> parse_oai_code(std::string_view text) {
  for (int i = 0; i <= static_cast<int>(OaiErrc::kNoSetHierarchy); ++i) {
    auto c = static_cast<OaiErrc>(i);
    if (oai_code(c) == text) return c;
  }
  return std::nullopt;
}

std::string_view verb_name(Verb verb) {
  for (const auto& [v, name] : kVerbs) {
    if (v == verb) return name;
  }
  return "?";
}

OaiRequest parse_request(const QueryParams& query) {
  OaiRequest req;
  req.args = query;
  std::map<std::string, std::vector<std::string>> by_key;
  for (const auto& [k, v] : query) by_key[k].push_back(v);

  auto verbs = by_key.find("verb");
  if (verbs == by_key.end()) throw OaiError(OaiErrc::kBadVerb, "missing verb argument");
  if (verbs->second.size() > 1) throw OaiError(OaiErrc::kBadVerb, "verb argument repeated");
  const std::string& verb_text = verbs->second.front();
  auto known = std::find_if(kVerbs.begin(), kVerbs.end(),
                            [&](const auto& p) { return p.second == verb_text; });
  if (known == kVerbs.end())
    throw OaiError(OaiErrc::kBadVerb, "illegal verb '" + verb_text + "'");
  req.verb = known->first;

  const ArgRule& rule = rule_for(req.verb);
  bool has_token = by_key.count("resumptionToken") != 0;
  for (const auto& [k, values] : by_key) {
    if (k == "verb") continue;
    bool ok = rule.allowed.count(k) || (rule.token && k == "resumptionToken");
    if (!ok) throw OaiError(OaiErrc::kBadArgument, "illegal argument '" + k + "' for " + verb_text);
    if (values.size() > 1) throw OaiError(OaiErrc::kBadArgument, "argument '" + k + "' repeated");
    if (values.front().empty())
      throw OaiError(OaiErrc::kBadArgument, "argument '" + k + "' is empty");
  }
  if (has_token) {
    if (by_key.size() != 2)
      throw OaiError(OaiErrc::kBadArgument, "resumptionToken is an exclusive argument");
    req.resumption_token = by_key["resumptionToken"].front();
    return req;
  }
  for (const auto& k : rule.required) {
    if (!by_key.count(std::string(k)))
      throw OaiError(OaiErrc::kBadArgument, "missing required argument '" + std::string(k) + "'");
  }
  auto take = [&](const char* k) -> std::optional<std::string> {
    auto it = by_key.find(k);
    if (it == by_key.end()) return std::nullopt;
    return it->second.front();
  };
  req.identifier = take("identifier");
  req.metadata_prefix = take("metadataPrefix");
  req.set = take("set");
  bool from_day = false, until_day = false;
  if (auto f = take("from")) {
    req.from = UtcTimestamp::parse_oai_date(*f, &from_day);
    if (!req.from) throw OaiError(OaiErrc::kBadArgument, "bad from date '" + *f + "'");
  }
  if (auto u = take("until")) {
    req.until = UtcTimestamp::parse_oai_date(*u, &until_day);
    if (!req.until) throw OaiError(OaiErrc::kBadArgument, "bad until date '" + *u + "'");
    if (until_day) req.until = *req.until + 86399;
  }
  if (req.from && req.until) {
    if (from_day != until_day)
      throw OaiError(OaiErrc::kBadArgument, "from and until differ in granularity");
    if (*req.from > *req.until)
      throw OaiError(OaiErrc::kBadArgument, "from is later than until");
  }
  return req;
}

std::string dispatch(const RecordSource& source, const OaiRequest& request,
                     UtcTimestamp now, const EngineOptions& options) {
  std::string body;
  try {
    body = verb_body(source, request, options);
  } catch (const OaiError& e) {
    body = error_body(e.code(), e.what());
  }
  std::string out;
  open_response(out, now, source.identify().base_url, &request.args);
  out += body;
  close_response(out);
  return out;
}

std::string handle(const RecordSource& source, const QueryParams& query,
                   UtcTimestamp now, const EngineOptions& options) {
  OaiRequest req;
  try {
    req = parse_request(query);
  } catch (const OaiError& e) {
    std::string out;
    open_response(out, now, source.identify().base_url, nullptr);
    out += error_body(e.code(), e.what());
    close_response(out);
    return out;
  }
  return dispatch(source, req, now, options);
}

Handler make_handler(const RecordSource& source, Clock clock, EngineOptions options) {
  return [&source, clock = std::move(clock), options](const QueryParams& q) {
    Response r;
    try {
      r.body = handle(source, q, clock(), options);
    } catch (const Error& e) {
      bool upstream = e.code() == Errc::kUpstreamUnavailable ||
                      e.code() == Errc::kTransportFailure;
      r.status = upstream ? 503 : 500;
      r.content_type = "text/plain";
      r.body = std::string(e.what()) + "\n";
    }
    return r;
  };
}

std::string encode_token(const TokenState& state) {
  std::string payload = token_payload(state);
  return base64url(payload + "\t" + seal(payload));
}

TokenState decode_token(std::string_view token) {
  auto bad = [](const std::string& why) {
    return OaiError(OaiErrc::kBadResumptionToken, "invalid resumptionToken: " + why);
  };
  auto raw = unbase64url(token);
  if (!raw) throw bad("not base64url");
  size_t tab = raw->rfind('\t');
  if (tab == std::string::npos) throw bad("no digest");
  std::string payload = raw->substr(0, tab);
  if (seal(payload) != raw->substr(tab + 1)) throw bad("digest mismatch");
  auto f = split(payload, '\t');
  if (f.size() != 9 || f[0] != "1") throw bad("unknown layout");
  for (auto& x : f) x = unescape_field(x);
  TokenState s;
  auto verb = std::find_if(kVerbs.begin(), kVerbs.end(),
                           [&](const auto& p) { return p.second == f[1]; });
  if (verb == kVerbs.end()) throw bad("unknown verb");
  s.verb = verb->first;
  s.cursor = f[2];
  s.query.prefix = f[3];
  try {
    if (!f[4].empty()) s.query.from = UtcTimestamp(std::stoll(f[4]));
    if (!f[5].empty()) s.query.until = UtcTimestamp(std::stoll(f[5]));
    s.page_size = std::stoull(f[7]);
    s.delivered = std::stoull(f[8]);
  } catch (const std::exception&) {
    throw bad("bad number");
  }
  if (!f[6].empty()) s.query.set = f[6].substr(1);
  return s;
}

std::string encode_set_token(std::string_view text) { return base64url(text); }

std::optional<std::string> decode_set_token(std::string_view token) {
  return unbase64url(token);
}

std::string_view strip_declaration(std::string_view x) {
  size_t i = 0;
  while (i < x.size() && (x[i] == ' ' || x[i] == '\n' || x[i] == '\r' || x[i] == '\t')) ++i;
  if (x.substr(i).starts_with("<?xml")) {
    size_t end = x.find("?>", i);
    if (end != std::string_view::npos) {
      i = end + 2;
      while (i < x.size() && (x[i] == '\n' || x[i] == '\r')) ++i;
    }
  }
  return x.substr(i);
}

}  // namespace adore::oai
