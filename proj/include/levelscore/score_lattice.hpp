#pragma once

// Discrete level lattice and probability vectors over it. A continuous score
// is represented as the expectation of the level scores under a distribution.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace levelscore {

inline constexpr double kUniformSpacingTol = 1e-12;
inline constexpr double kNormalizationTol = 1e-9;
inline constexpr double kRenormalizeTol = 1e-6;

/// K uniformly spaced level scores inside [0, M].
class LevelGrid {
 public:
  /// Validates K >= 2, strictly increasing uniform spacing, and levels within
  /// [0, score_max]. `names` may be empty; otherwise it must have K entries.
  LevelGrid(std::vector<double> levels, double score_max, std::vector<std::string> names = {});

  /// K levels first, first + step, ...
  static LevelGrid uniform(std::size_t k, double first, double step, double score_max,
                           std::vector<std::string> names = {});

  /// The five-level lattice {1, 2, 3, 4, 5}, d = 1, M = 5.
  static LevelGrid default_five();

  std::size_t size() const noexcept { return levels_.size(); }
  std::span<const double> levels() const noexcept { return levels_; }
  double level(std::size_t i) const { return levels_.at(i); }
  double front() const noexcept { return levels_.front(); }
  double back() const noexcept { return levels_.back(); }
  double bin_width() const noexcept { return bin_width_; }
  double score_min() const noexcept { return 0.0; }
  double score_max() const noexcept { return score_max_; }
  double midpoint() const noexcept { return 0.5 * (levels_.front() + levels_.back()); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// Same spacing and names with every level moved by `offset`. score_max moves
  /// with it so the grid stays valid.
  LevelGrid shifted(double offset) const;

  bool operator==(const LevelGrid&) const = default;

 private:
  std::vector<double> levels_;
  double bin_width_ = 0.0;
  double score_max_ = 0.0;
  std::vector<std::string> names_;
};

/// Non-negative probability vector. Inputs within kRenormalizeTol of unit
/// mass are renormalized; anything further off is rejected.
class ScoreDistribution {
 public:
  explicit ScoreDistribution(std::vector<double> probs);

  static ScoreDistribution one_hot(std::size_t k, std::size_t index);
  static ScoreDistribution uniform(std::size_t k);

  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  bool operator==(const ScoreDistribution&) const = default;

 private:
  std::vector<double> probs_;
};

/// Expected level score sum_i p_i l_i, clamped into [l_1, l_K] to absorb rounding.
double decode_score(const ScoreDistribution& dist, const LevelGrid& grid);

/// Index of the level closest to x; ties go to the lower index.
/// Throws kOutOfRange when x lies outside [0, M].
std::size_t nearest_level(double x, const LevelGrid& grid);

/// Affine map from a dataset's native score range onto [l_1, l_K].
struct ScoreRescale {
  double source_min = 0.0;
  double source_max = 1.0;
  double target_min = 0.0;
  double target_max = 1.0;

  static ScoreRescale onto(const LevelGrid& grid, double source_min, double source_max);
  static ScoreRescale identity(const LevelGrid& grid);

  double forward(double source) const noexcept;
  double inverse(double target) const noexcept;
};

}  // namespace levelscore
