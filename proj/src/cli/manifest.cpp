#include "levelscore/manifest.hpp"

#include <chrono>
#include <ctime>

#include "levelscore/io.hpp"

namespace levelscore::cli {

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j = global;
  j["schema_version"] = kManifestSchemaVersion;
  j["subcommand"] = subcommand;
  j[subcommand] = config;
  j["root_seed"] = seed;
  j["version"] = version;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["started_at"] = started_at;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["kernel_isa"] = kernel_isa;
  return j;
}

std::filesystem::path manifest_path_for_file(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p += ".manifest.json";
  return p;
}

std::filesystem::path manifest_path_for_dir(const std::filesystem::path& dir) {
  return dir / "manifest.json";
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  io::write_text_atomic(path, manifest.to_json().dump(2) + "\n");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace levelscore::cli
