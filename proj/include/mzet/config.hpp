#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mzet {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every recognised key with its built-in default, in display order.
const std::vector<ConfigKey>& ConfigKeys();

// Flat key=value configuration. Precedence is defaults, then files merged in
// order, then explicit Set calls (flags).
class Config {
 public:
  Config();  // all defaults

  // Unknown keys and malformed lines raise ConfigError. Manifest-only keys
  // (command, artifact_version, timestamp and the digest., eval.,
  // model., synth. families) are skipped, so a run
  // manifest can be fed back as a config file.
  void MergeFile(const std::filesystem::path& path);
  void MergeText(std::string_view text, const std::string& origin = "<text>");
  void Set(const std::string& key, const std::string& value);

  bool Has(const std::string& key) const;
  const std::string& Get(const std::string& key) const;
  int GetInt(const std::string& key) const;
  uint64_t GetU64(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  bool Empty(const std::string& key) const { return Get(key).empty(); }

  const std::map<std::string, std::string>& values() const { return values_; }
  // "key=value" lines, sorted by key.
  std::string Serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mzet
