#include "adore/openurl.hpp"

#include <json.hpp>

#include "adore/error.hpp"
#include "adore/harvest.hpp"

namespace adore::openurl {
namespace {

std::optional<std::string> take(QueryParams& q, std::string_view key) {
  std::optional<std::string> out;
  for (auto it = q.begin(); it != q.end();) {
    if (it->first == key) {
      if (!out) out = it->second;
      it = q.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

}  // namespace

ContextObject parse_kev(const QueryParams& query) {
  QueryParams q = query;
  ContextObject ctx;
  auto version = take(q, "url_ver");
  if (!version || *version != kVersion)
    throw Error(Errc::kUnsupportedVersion,
                "url_ver must be " + std::string(kVersion) +
                    (version ? ", got " + *version : std::string(", none given")));
  ctx.version = *version;
  auto rft = take(q, "rft_id");
  if (!rft || trim(*rft).empty()) throw Error(Errc::kMissingReferent, "rft_id is required");
  ctx.referent_id = std::string(trim(*rft));
  ctx.service_type_id = take(q, "svc_id");
  if (ctx.service_type_id && ctx.service_type_id->empty()) ctx.service_type_id.reset();
  ctx.requester_id = take(q, "req_id");
  ctx.referrer_id = take(q, "rfr_id");
  ctx.referring_entity_id = take(q, "rfe_id");
  ctx.resolver_id = take(q, "res_id");
  ctx.extra = std::move(q);
  return ctx;
}

ContextObject parse_kev(std::string_view query) { return parse_kev(parse_query(query)); }

std::string format_kev(const ContextObject& ctx) {
  QueryParams q{{"url_ver", ctx.version}, {"rft_id", ctx.referent_id}};
  auto add = [&](const char* key, const std::optional<std::string>& v) {
    if (v) q.emplace_back(key, *v);
  };
  add("svc_id", ctx.service_type_id);
  add("req_id", ctx.requester_id);
  add("rfr_id", ctx.referrer_id);
  add("rfe_id", ctx.referring_entity_id);
  add("res_id", ctx.resolver_id);
  q.insert(q.end(), ctx.extra.begin(), ctx.extra.end());
  return build_query(q);
}

std::string_view step_name(Step step) {
  switch (step) {
    case Step::kResolve: return "resolve";
    case Step::kFetch: return "fetch";
    case Step::kComplete: return "complete";
    case Step::kApply: return "apply";
    case Step::kRespond: return "respond";
  }
  return "?";
}

std::vector<locator::FetchPlan> Resolver::versions(const std::string& referent) const {
  return locator_.resolve(referent);
}

dip::Output Resolver::resolve(const ContextObject& ctx, const Trace& trace) const {
  auto emit = [&](Step s, std::string detail) {
    if (trace) trace({s, std::move(detail)});
  };
  const locator::FetchPlan plan = locator_.resolve(ctx.referent_id).front();
  if (!plan.repo_base_url)
    throw Error(Errc::kNotFound, "no repository recorded for " + plan.package_id);
  didl::PackageIdentifier target{plan.package_id, plan.xml_id};
  emit(Step::kResolve, target.str() + " at " + *plan.repo_base_url);

  oai::Harvester harvester(transport_);
  oai::Record record;
  try {
    record = harvester.get_record(*plan.repo_base_url, plan.package_id, "DIDL");
  } catch (const oai::ProtocolError& e) {
    if (e.oai_errc() == oai::OaiErrc::kIdDoesNotExist)
      throw Error(Errc::kNotFound, plan.package_id + " is not in " + *plan.repo_base_url);
    throw Error(Errc::kUpstreamUnavailable, *plan.repo_base_url + ": " + e.what());
  } catch (const Error& e) {
    throw Error(Errc::kUpstreamUnavailable, *plan.repo_base_url + ": " + e.what());
  }
  emit(Step::kFetch, plan.package_id + " " + std::to_string(record.metadata.size()) + " bytes");

  auto completion = dip::complete(didl::parse_didl(record.metadata), engine_.table());
  emit(Step::kComplete, std::to_string(completion.insertions.size()) + " methods inserted");

  dip::Output out = engine_.apply(completion.document, target, ctx.service_type_id);
  emit(Step::kApply, ctx.service_type_id.value_or("raw") + " on " + target.str());
  emit(Step::kRespond, out.mime_type + " " + std::to_string(out.bytes.size()) + " bytes");
  return out;
}

int status_for(Errc code) {
  switch (code) {
    case Errc::kNotFound: return 404;
    case Errc::kMissingReferent:
    case Errc::kUnsupportedVersion:
    case Errc::kServiceNotApplicable:
    case Errc::kUnknownService:
    case Errc::kUnknownTarget:
    case Errc::kInvalidArgument: return 400;
    case Errc::kUpstreamUnavailable:
    case Errc::kTransportFailure: return 502;
    default: return 500;
  }
}

Handler make_handler(const Resolver& resolver, LogSink log) {
  return [&resolver, log = std::move(log)](const QueryParams& query) {
    nlohmann::json entry{{"service", "openurl"}, {"query", build_query(query)}};
    nlohmann::json steps = nlohmann::json::array();
    Response res;
    try {
      ContextObject ctx = parse_kev(query);
      if (ctx.requester_id) entry["requester_ignored"] = *ctx.requester_id;
      bool list_versions = false;
      for (const auto& [k, v] : ctx.extra) list_versions |= k == kVersionsKey && v == "1";
      if (list_versions) {
        res.content_type = "application/json";
        res.body = locator::plans_json(ctx.referent_id, resolver.versions(ctx.referent_id));
      } else {
        dip::Output out = resolver.resolve(ctx, [&](const TraceEvent& e) {
          steps.push_back({{"step", step_name(e.step)}, {"detail", e.detail}});
        });
        res.content_type = out.mime_type;
        res.body = std::move(out.bytes);
      }
    } catch (const Error& e) {
      res.status = status_for(e.code());
      res.content_type = "text/plain; charset=UTF-8";
      res.body = std::string(e.what()) + "\n";
      entry["error"] = errc_name(e.code());
    }
    entry["status"] = res.status;
    entry["steps"] = std::move(steps);
    if (log) log(entry.dump());
    return res;
  };
}

}  // namespace adore::openurl
