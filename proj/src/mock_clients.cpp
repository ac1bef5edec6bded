#include "levelscore/mock_clients.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "json.hpp"
#include "levelscore/error.hpp"

namespace levelscore::pipeline {
namespace {

std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t hash) noexcept {
  char bytes[sizeof v];
  std::memcpy(bytes, &v, sizeof v);
  return fnv1a(std::string_view(bytes, sizeof bytes), hash);
}

}  // namespace

std::uint64_t fnv1a(std::string_view data, std::uint64_t hash) noexcept {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string MockGenerator::generate(const std::string& image_id, const std::string& prompt,
                                    std::size_t round) {
  nlohmann::json p;
  try {
    p = nlohmann::json::parse(prompt);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("prompt is not valid JSON: ") + e.what());
  }
  const double z = p.at("z_score").get<double>();

  std::uint64_t h = fnv1a_u64(seed_, 0xcbf29ce484222325ull);
  h = fnv1a(image_id, h);
  h = fnv1a_u64(round, h);
  // Top 53 bits to a uniform double in [0, 1).
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  const double jitter = 3.0 * u - 1.5;
  const long bucket = std::clamp(std::lround(z + jitter), -2L, 2L);

  std::string text = "draft " + std::to_string(round + 1) + ".";
  for (const auto& level : p.at("templates")) {
    text += ' ';
    text += level.at("text").get<std::string>();
  }
  text += " Overall the work is ";
  text += kToneWords[bucket + 2];
  text += '.';
  return text;
}

double HashDiscriminator::align(double score, const DatasetStats& stats,
                                const std::string& description) {
  std::size_t best_pos = std::string::npos;
  int implied = 0;
  for (int b = 0; b < 5; ++b) {
    const std::size_t pos = description.rfind(kToneWords[b]);
    if (pos != std::string::npos && (best_pos == std::string::npos || pos > best_pos)) {
      best_pos = pos;
      implied = b - 2;
    }
  }
  if (best_pos == std::string::npos) return 0.0;
  const double z =
      stats.variance > 0.0 ? (score - stats.mean) / std::sqrt(stats.variance) : 0.0;
  const double diff = static_cast<double>(implied) - std::clamp(z, -2.0, 2.0);
  return std::exp(-0.5 * diff * diff);
}

ScriptedDiscriminator::ScriptedDiscriminator(std::vector<double> schedule)
    : schedule_(std::move(schedule)) {
  if (schedule_.empty()) throw Error(ErrorCode::kParameter, "alignment schedule is empty");
}

double ScriptedDiscriminator::align(double, const DatasetStats&, const std::string&) {
  const std::size_t i = std::min(calls_, schedule_.size() - 1);
  ++calls_;
  return schedule_[i];
}

std::string FlakyGenerator::generate(const std::string& image_id, const std::string& prompt,
                                     std::size_t round) {
  std::size_t& n = attempts_[{image_id, round}];
  if (n++ < failures_) throw TransportError("simulated transport failure");
  return inner_.generate(image_id, prompt, round);
}

}  // namespace levelscore::pipeline
