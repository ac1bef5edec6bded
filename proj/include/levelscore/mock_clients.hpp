#pragma once

// Deterministic stand-ins for the generator and discriminator services.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "levelscore/datagen_pipeline.hpp"

namespace levelscore::pipeline {

/// FNV-1a 64 over the bytes of `data`, continuing from `hash`.
std::uint64_t fnv1a(std::string_view data, std::uint64_t hash = 0xcbf29ce484222325ull) noexcept;

/// Tone words for z-score buckets -2..2.
inline constexpr std::string_view kToneWords[5] = {"dismal", "weak", "ordinary", "strong",
                                                    "exceptional"};

/// Fills the prompt's templates into a description ending in a tone word. The
/// tone bucket is round(z + jitter) clamped to [-2, 2], where jitter is uniform
/// in [-1.5, 1.5] and drawn from a hash of (seed, image_id, round). A pure
/// function of its inputs.
class MockGenerator : public GeneratorClient {
 public:
  explicit MockGenerator(std::uint64_t seed) : seed_(seed) {}
  std::string generate(const std::string& image_id, const std::string& prompt,
                       std::size_t round) override;

 private:
  std::uint64_t seed_;
};

/// Reads the last tone word in the description as an implied z-score and
/// returns exp(-(implied - actual)^2 / 2), with the actual z clamped to
/// [-2, 2]. No tone word gives 0.
class HashDiscriminator : public DiscriminatorClient {
 public:
  double align(double score, const DatasetStats& stats, const std::string& description) override;
};

/// Returns schedule[i] on the i-th call, repeating the last value once the
/// schedule runs out.
class ScriptedDiscriminator : public DiscriminatorClient {
 public:
  explicit ScriptedDiscriminator(std::vector<double> schedule);
  double align(double score, const DatasetStats& stats, const std::string& description) override;
  void reset() noexcept { calls_ = 0; }
  std::size_t calls() const noexcept { return calls_; }

 private:
  std::vector<double> schedule_;
  std::size_t calls_ = 0;
};

/// Wraps a generator and throws TransportError on the first `failures`
/// attempts of every (image_id, round).
class FlakyGenerator : public GeneratorClient {
 public:
  FlakyGenerator(GeneratorClient& inner, std::size_t failures) : inner_(inner), failures_(failures) {}
  std::string generate(const std::string& image_id, const std::string& prompt,
                       std::size_t round) override;

 private:
  GeneratorClient& inner_;
  std::size_t failures_;
  std::map<std::pair<std::string, std::size_t>, std::size_t> attempts_;
};

}  // namespace levelscore::pipeline
