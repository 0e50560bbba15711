#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace susmap {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64 over the raw file bytes, lowercase hex. Used to pin inputs in
// manifests and to detect mutation between pipeline stages.
std::string file_digest_hex(const std::filesystem::path& path);
std::string bytes_digest_hex(const std::string& bytes);

struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> config_echo;
  std::map<std::string, std::string> input_digests;  // path -> digest
  std::map<std::string, std::string> decisions;      // e.g. gamma_hat, phi_hat, verdict
  double wall_seconds = 0.0;
};

// Writes manifest.json into the output directory (exactly one per
// stochastic run directory).
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

}  // namespace susmap
