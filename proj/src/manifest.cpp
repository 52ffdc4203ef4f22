#include "cim/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cim/version.hpp"

namespace cim {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x00000100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return fnv1a64(bytes.data(), bytes.size());
}

std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

std::string RunManifest::to_json() const {
  nlohmann::json doc;
  doc["format_version"] = "1.0";
  doc["command"] = command;
  doc["digest"] = digest;
  doc["master_seed"] = master_seed;
  doc["version"] = version;
  doc["timestamp"] = timestamp;  // informational; not covered by the digest
  doc["elapsed_seconds"] = elapsed_seconds;
  doc["outputs"] = outputs;
  return doc.dump(2);
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_json() << '\n';
}

RunManifest make_manifest(const std::string& command, std::uint64_t input_digest,
                          std::uint64_t master_seed, std::vector<std::string> outputs) {
  RunManifest m;
  m.command = command;
  m.digest = digest_hex(input_digest);
  m.master_seed = master_seed;
  m.version = CIM_VERSION;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  m.timestamp = buf;
  m.outputs = std::move(outputs);
  return m;
}

}  // namespace cim
