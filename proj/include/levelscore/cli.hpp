#pragma once

// Entry point for the `levelscore` binary.
//
// Exit status: 0 on success, 1 on a domain error (a JSON object
// {"error": {"code", "message"}} goes to stderr), 2 on a usage error.

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace levelscore::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming a default JSON config file.
inline constexpr const char* kConfigEnv = "LEVELSCORE_CONFIG";

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Levenshtein distance.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Closest candidate within distance max(2, |word| / 3); empty when none is.
std::string closest_match(std::string_view word, const std::vector<std::string>& candidates);

}  // namespace levelscore::cli
