#include "adore/scenario.hpp"

#include <chrono>
#include <map>
#include <random>
#include <sstream>

#include "adore/error.hpp"
#include "adore/xml.hpp"

namespace adore::scenario {
namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Expected {
  std::string repo;
  std::string package_id;
  std::optional<std::string> xml_id;
};

}  // namespace

ingest::ObjectManifest synthetic_object(std::uint32_t seed, std::size_t n, std::string_view ns) {
  std::mt19937 rng(seed * 2654435761u + static_cast<std::uint32_t>(n));
  std::string tag = std::to_string(seed) + "-" + std::to_string(n);
  std::string prefix(ns);
  ingest::ObjectManifest m;
  m.object_content_id = didl::ContentIdentifier{"info:scenario/obj/" + tag};
  m.family_placeholder = prefix + "pro/paper";

  ingest::DatastreamSpec record;
  record.mime_type = "text/xml; charset=UTF-8";
  record.content_id = didl::ContentIdentifier{"info:scenario/rec/" + tag};
  record.format_placeholder = prefix + "fmt/3";
  record.bytes = "<record xmlns=\"http://www.loc.gov/MARC21/slim\"><controlfield tag=\"001\">" +
                 tag + "</controlfield><datafield tag=\"245\" ind1=\"1\" ind2=\"0\">" +
                 "<subfield code=\"a\">Synthetic object " + xml::escape_text(tag) +
                 "</subfield></datafield></record>";
  m.datastreams.push_back(std::move(record));

  if (rng() % 2 == 0) {
    ingest::DatastreamSpec blob;
    blob.mime_type = "application/octet-stream";
    blob.format_placeholder = prefix + "fmt/5";
    std::size_t size = 64 + rng() % 2048;
    blob.bytes.resize(size);
    for (auto& c : blob.bytes) c = static_cast<char>(rng() & 0xff);
    m.datastreams.push_back(std::move(blob));
  }
  return m;
}

Stats run(deploy::Deployment& d, const Options& options) {
  Stats s;
  std::vector<std::pair<std::string, Expected>> expected;  // identifier -> plan
  std::size_t arc_before = d.arc().size();

  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t start = 0; start < options.objects; start += options.batch_size) {
    std::size_t end = std::min(options.objects, start + options.batch_size);
    std::vector<ingest::ObjectManifest> batch;
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(synthetic_object(options.seed, i, d.config().namespace_prefix));
    for (const auto& m : batch)
      for (const auto& ds : m.datastreams) s.inline_datastreams += ingest::is_xml_mime(ds.mime_type);
    auto report = d.ingest_batch(batch);
    ++s.tapes;
    for (const auto& [what, why] : report.failures) s.failures.push_back(what + ": " + why);
    auto* repo = d.repository(report.base_url);
    for (const auto& pid : report.package_ids) {
      auto doc = didl::parse_didl(repo->tape().get(pid).didl_bytes);
      expected.push_back({pid, {report.base_url, pid, std::nullopt}});
      for (const auto& ref : didl::extract_identifiers(doc))
        expected.push_back({ref.content_id.uri, {report.base_url, pid, ref.xml_id}});
    }
    s.objects += report.package_ids.size();
  }
  s.arc_records = d.arc().size() - arc_before;
  s.ingest_seconds = since(t0);

  t0 = std::chrono::steady_clock::now();
  auto populated = d.populate_locator();
  for (const auto& [repo, why] : populated.failures) s.failures.push_back(repo + ": " + why);
  s.package_rows = d.locator().package_count();
  s.content_rows = d.locator().content_count();
  s.populate_seconds = since(t0);

  t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(options.seed);
  locator::RemoteLocator lookup(d.transport(), d.config().endpoints.locator);
  // Alternate kinds so both are sampled evenly.
  std::vector<std::size_t> packages, contents;
  for (std::size_t i = 0; i < expected.size(); ++i)
    (expected[i].second.xml_id ? contents : packages).push_back(i);
  for (std::size_t k = 0; k < options.resolves && !expected.empty(); ++k) {
    const auto& pool = (k % 2 == 0 && !packages.empty()) || contents.empty() ? packages : contents;
    const auto& [id, want] = expected[pool[rng() % pool.size()]];
    ++s.resolves;
    try {
      auto plans = lookup.resolve(id);
      const auto& p = plans.front();
      if (plans.size() == 1 && p.repo_base_url == want.repo && p.package_id == want.package_id &&
          p.xml_id == want.xml_id) {
        ++s.resolved_ok;
      } else {
        s.failures.push_back("wrong plan for " + id);
      }
    } catch (const Error& e) {
      s.failures.push_back(id + ": " + e.what());
    }
  }
  s.resolve_seconds = since(t0);
  return s;
}

std::string format(const Stats& s) {
  std::ostringstream out;
  out << "objects " << s.objects << "\n"
      << "tapes " << s.tapes << "\n"
      << "arc_records " << s.arc_records << "\n"
      << "inline_datastreams " << s.inline_datastreams << "\n"
      << "package_rows " << s.package_rows << "\n"
      << "content_rows " << s.content_rows << "\n"
      << "resolved " << s.resolved_ok << "/" << s.resolves << "\n"
      << "ingest_seconds " << s.ingest_seconds << "\n"
      << "populate_seconds " << s.populate_seconds << "\n"
      << "resolve_seconds " << s.resolve_seconds << "\n";
  for (const auto& f : s.failures) out << "failure " << f << "\n";
  return out.str();
}

}  // namespace adore::scenario
