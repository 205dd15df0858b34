#pragma once

#include <memory>
#include <string>

#include "adore/oai.hpp"
#include "adore/tape.hpp"

// Autonomous repository: one XMLtape exposed over OAI-PMH. DIDL is the only
// metadata format and sets are not supported.
namespace adore::repo {

inline constexpr std::string_view kDidlPrefix = "DIDL";
inline constexpr std::string_view kDidlSchema = "urn:mpeg:mpeg21:2002:02-DIDL-NS DIDL.xsd";

class TapeRepository : public oai::RecordSource {
 public:
  TapeRepository(std::string name, std::string base_url, std::shared_ptr<tape::Tape> tape,
                 UtcTimestamp created = {});

  oai::Identity identify() const override;
  std::vector<oai::MetadataFormat> formats(
      const std::optional<std::string>& identifier) const override;
  std::vector<oai::SetInfo> sets() const override;
  oai::Record get(const std::string& identifier, const std::string& prefix) const override;
  oai::ListPage list(const oai::ListQuery& query, const std::string& cursor, std::size_t limit,
                     bool headers_only) const override;

  const std::string& base_url() const { return base_url_; }
  tape::Tape& tape() const { return *tape_; }

 private:
  std::string name_;
  std::string base_url_;
  std::shared_ptr<tape::Tape> tape_;
  UtcTimestamp created_;
};

oai::MetadataFormat didl_format();

}  // namespace adore::repo
