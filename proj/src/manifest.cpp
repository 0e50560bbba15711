#include "susmap/manifest.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "susmap/error.hpp"

namespace susmap {

namespace {

std::string digest_to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t fnv1a(const char* data, size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string bytes_digest_hex(const std::string& bytes) {
  return digest_to_hex(fnv1a(bytes.data(), bytes.size()));
}

std::string file_digest_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open file for digest: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
  return digest_to_hex(h);
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
  nlohmann::json j;
  j["tool"] = "susmap";
  j["version"] = kToolVersion;
  j["subcommand"] = manifest.subcommand;
  j["config"] = manifest.config_echo;
  j["inputs"] = manifest.input_digests;
  j["decisions"] = manifest.decisions;
  j["wall_seconds"] = manifest.wall_seconds;

  std::ofstream out(out_dir / "manifest.json");
  if (!out) fail(errc::io, "cannot write manifest in " + out_dir.string());
  out << j.dump(2) << '\n';
}

}  // namespace susmap
