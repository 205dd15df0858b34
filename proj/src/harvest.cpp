#include "adore/harvest.hpp"

#include "adore/xml.hpp"

namespace adore::oai {
namespace {

struct Parsed {
  std::string body;
  xml::Element root;
};

const xml::Element* child(const xml::Element& e, std::string_view local) {
  return e.first(kOaiNs, local);
}

std::string child_text(const xml::Element& e, std::string_view local) {
  const xml::Element* c = child(e, local);
  return c ? c->text() : std::string();
}

UtcTimestamp parse_datestamp(const std::string& text) {
  auto t = UtcTimestamp::parse_oai_date(text);
  if (!t) throw Error(Errc::kProtocolError, "bad datestamp '" + text + "' in response");
  return *t;
}

Header parse_header(const xml::Element& h) {
  Header out;
  out.identifier = child_text(h, "identifier");
  out.datestamp = parse_datestamp(child_text(h, "datestamp"));
  for (const xml::Element* e : h.elements()) {
    if (e->ns == kOaiNs && e->local == "setSpec") out.sets.push_back(e->text());
  }
  return out;
}

Record parse_record(const xml::Element& r, const std::string& body) {
  Record out;
  const xml::Element* h = child(r, "header");
  if (!h) throw Error(Errc::kProtocolError, "record without header");
  out.header = parse_header(*h);
  if (const xml::Element* m = child(r, "metadata"))
    out.metadata = body.substr(m->content_begin, m->content_end - m->content_begin);
  return out;
}

// Throws ProtocolError for an <error> response unless its code is `tolerated`.
bool check_error(const xml::Element& root, std::optional<OaiErrc> tolerated = {}) {
  const xml::Element* err = child(root, "error");
  if (!err) return false;
  const std::string* code = err->attribute("code");
  auto parsed = code ? parse_oai_code(*code) : std::nullopt;
  if (!parsed) throw Error(Errc::kProtocolError, "unrecognised error code in response");
  if (tolerated && *parsed == *tolerated) return true;
  throw ProtocolError(*parsed, err->text());
}

const xml::Element& verb_element(const xml::Element& root, std::string_view verb) {
  const xml::Element* e = child(root, verb);
  if (!e) throw Error(Errc::kProtocolError, "response lacks <" + std::string(verb) + ">");
  return *e;
}

}  // namespace

std::string Harvester::fetch(const std::string& base_url, const QueryParams& params) {
  Response r = transport_.get(base_url, params);
  if (r.status != 200)
    throw Error(Errc::kTransportFailure,
                base_url + " answered HTTP " + std::to_string(r.status));
  return std::move(r.body);
}

namespace {

Parsed request(Harvester& h, const std::string& base_url, const QueryParams& params) {
  Parsed p;
  p.body = h.fetch(base_url, params);
  p.root = xml::parse(p.body);
  if (p.root.ns != kOaiNs || p.root.local != "OAI-PMH")
    throw Error(Errc::kProtocolError, base_url + " did not return an OAI-PMH response");
  return p;
}

}  // namespace

HarvestPage Harvester::list_page(const std::string& base_url, const HarvestOptions& options,
                                 const std::optional<std::string>& token) {
  std::string verb = options.headers_only ? "ListIdentifiers" : "ListRecords";
  QueryParams params{{"verb", verb}};
  if (token) {
    params.emplace_back("resumptionToken", *token);
  } else {
    params.emplace_back("metadataPrefix", options.prefix);
    if (options.from) params.emplace_back("from", options.from->iso8601());
    if (options.until) params.emplace_back("until", options.until->iso8601());
    if (options.set) params.emplace_back("set", *options.set);
  }
  Parsed p = request(*this, base_url, params);
  HarvestPage page;
  if (check_error(p.root, OaiErrc::kNoRecordsMatch)) return page;
  const xml::Element& list = verb_element(p.root, verb);
  for (const xml::Element* e : list.elements()) {
    if (e->ns != kOaiNs) continue;
    if (options.headers_only && e->local == "header") {
      page.records.push_back({parse_header(*e), {}});
    } else if (!options.headers_only && e->local == "record") {
      page.records.push_back(parse_record(*e, p.body));
    } else if (e->local == "resumptionToken") {
      std::string t = e->text();
      if (!t.empty()) page.token = t;
    }
  }
  return page;
}

HarvestStats Harvester::harvest(const std::string& base_url, const HarvestOptions& options,
                                const std::function<void(const Record&)>& visit) {
  HarvestStats stats;
  std::optional<std::string> token;
  do {
    HarvestPage page = list_page(base_url, options, token);
    ++stats.pages;
    for (const Record& r : page.records) {
      ++stats.records;
      if (!stats.max_datestamp || r.header.datestamp > *stats.max_datestamp)
        stats.max_datestamp = r.header.datestamp;
      visit(r);
    }
    token = page.token;
  } while (token);
  return stats;
}

std::vector<Record> Harvester::harvest_all(const std::string& base_url,
                                           const HarvestOptions& options, HarvestStats* stats) {
  std::vector<Record> out;
  HarvestStats s = harvest(base_url, options, [&](const Record& r) { out.push_back(r); });
  if (stats) *stats = s;
  return out;
}

Record Harvester::get_record(const std::string& base_url, const std::string& identifier,
                             const std::string& prefix) {
  Parsed p = request(*this, base_url,
                     {{"verb", "GetRecord"}, {"identifier", identifier}, {"metadataPrefix", prefix}});
  check_error(p.root);
  const xml::Element* r = child(verb_element(p.root, "GetRecord"), "record");
  if (!r) throw Error(Errc::kProtocolError, "GetRecord without record");
  return parse_record(*r, p.body);
}

Identity Harvester::identify(const std::string& base_url) {
  Parsed p = request(*this, base_url, {{"verb", "Identify"}});
  check_error(p.root);
  const xml::Element& e = verb_element(p.root, "Identify");
  Identity id;
  id.repository_name = child_text(e, "repositoryName");
  id.base_url = child_text(e, "baseURL");
  id.admin_email = child_text(e, "adminEmail");
  id.earliest_datestamp = parse_datestamp(child_text(e, "earliestDatestamp"));
  id.deleted_record = child_text(e, "deletedRecord");
  return id;
}

std::vector<MetadataFormat> Harvester::list_metadata_formats(
    const std::string& base_url, const std::optional<std::string>& identifier) {
  QueryParams params{{"verb", "ListMetadataFormats"}};
  if (identifier) params.emplace_back("identifier", *identifier);
  Parsed p = request(*this, base_url, params);
  check_error(p.root);
  std::vector<MetadataFormat> out;
  for (const xml::Element* f : verb_element(p.root, "ListMetadataFormats").elements()) {
    if (f->local != "metadataFormat") continue;
    out.push_back({child_text(*f, "metadataPrefix"), child_text(*f, "schema"),
                   child_text(*f, "metadataNamespace")});
  }
  return out;
}

std::vector<SetInfo> Harvester::list_sets(const std::string& base_url) {
  Parsed p = request(*this, base_url, {{"verb", "ListSets"}});
  if (check_error(p.root, OaiErrc::kNoSetHierarchy)) return {};
  std::vector<SetInfo> out;
  for (const xml::Element* s : verb_element(p.root, "ListSets").elements()) {
    if (s->local != "set") continue;
    out.push_back({child_text(*s, "setSpec"), child_text(*s, "setName")});
  }
  return out;
}

}  // namespace adore::oai
