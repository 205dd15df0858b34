#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adore {

// Ordered key/value pairs as they appear in an HTTP query string. Order and
// repetition are kept because OAI-PMH treats repeated arguments as errors.
using QueryParams = std::vector<std::pair<std::string, std::string>>;

// Random (version 4) UUID in canonical 8-4-4-4-12 lowercase form.
std::string random_uuid();
// Name-based (version 5) UUID: equal names give equal UUIDs.
std::string name_uuid(std::string_view name);

std::string base64_encode(std::string_view bytes);
// Whitespace inside the input is ignored; nullopt on any other invalid input.
std::optional<std::string> base64_decode(std::string_view text);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

std::string percent_encode(std::string_view text);
std::string percent_decode(std::string_view text);

QueryParams parse_query(std::string_view query);
std::string build_query(const QueryParams& params);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

// Identifiers and timestamps are embedded in line-oriented sidecar files;
// these escape the separator characters.
std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);

}  // namespace adore
