#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cim {

// FNV-1a 64-bit content digest; stable across platforms.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);
std::string digest_hex(std::uint64_t d);

// Provenance record written next to every command's outputs. The digest
// covers every input that affects results (config bytes, input file bytes,
// result-relevant flags); the timestamp is informational and excluded from
// reproducibility comparisons.
struct RunManifest {
  std::string command;
  std::string digest;
  std::uint64_t master_seed = 0;
  std::string version;
  std::string timestamp;  // UTC, ISO 8601
  double elapsed_seconds = 0.0;  // informational, like the timestamp
  std::vector<std::string> outputs;

  std::string to_json() const;
  void write(const std::string& path) const;
};

RunManifest make_manifest(const std::string& command, std::uint64_t input_digest,
                          std::uint64_t master_seed, std::vector<std::string> outputs);

}  // namespace cim
