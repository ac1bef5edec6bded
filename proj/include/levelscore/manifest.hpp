#pragma once

// Run manifest written next to every CLI output artifact.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace levelscore::cli {

inline constexpr int kManifestSchemaVersion = 1;

struct RunManifest {
  std::string subcommand;
  /// Resolved options of the subcommand, keyed by long option name. Stored
  /// under the subcommand's name so the manifest doubles as a --config file.
  nlohmann::json config = nlohmann::json::object();
  /// Resolved root options (currently --kernels).
  nlohmann::json global = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started_at;  // UTC, ISO 8601
  double wall_clock_seconds = 0.0;
  std::string kernel_isa;

  nlohmann::json to_json() const;
};

/// Manifest location for a single-file output: "<output>.manifest.json".
std::filesystem::path manifest_path_for_file(const std::filesystem::path& output);

/// Manifest location for a directory of outputs: "<dir>/manifest.json".
std::filesystem::path manifest_path_for_dir(const std::filesystem::path& dir);

/// Atomic write (temporary file plus rename).
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace levelscore::cli
