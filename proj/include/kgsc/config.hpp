#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace kgsc {

/// Flat key=value configuration. Precedence is handled by the caller:
/// built-in defaults first, then a config file, then CLI flags, each layer
/// overwriting the previous one via set().
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::filesystem::path& path);
  static KeyValueConfig from_stream(std::istream& in);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key) const;  // throws Error if absent
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Every CLI run writes one manifest echoing the fully resolved
/// configuration, the seed, and digests of every input file.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  std::string timestamp;  // RFC 3339, UTC

  void add_input(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

std::string utc_timestamp_now();

}  // namespace kgsc
