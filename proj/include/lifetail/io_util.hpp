#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lifetail {

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

// Strict double parse; errors carry the field name and 1-based row.
double parse_number(const std::string& s, const std::string& field, std::size_t row);

// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

// Ordered key/value file ("key = value" per line, '#' comments,
// duplicate keys preserved). Used for scenario configs, truth sidecars
// and run manifests.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues read_key_values(const std::string& path);
void write_key_values(const std::string& path, const KeyValues& kv);

// FNV-1a 64-bit checksum of a file's bytes, hex encoded.
std::string file_checksum(const std::string& path);

}  // namespace lifetail
