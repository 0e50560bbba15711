#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "susmap/error.hpp"

namespace susmap {

// Flat key-value configuration with [section] headers; keys are stored and
// addressed as "section.key". Later assignments win, so command-line
// overrides are plain set() calls on top of the loaded file.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  // Parse "section.key=value" (as passed to --set).
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::string require_str(const std::string& key) const;

  // Sorted key=value lines; echoed into manifests and scenario files.
  std::vector<std::string> echo() const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace susmap
