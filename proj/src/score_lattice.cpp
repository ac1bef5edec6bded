#include "levelscore/score_lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "levelscore/error.hpp"
#include "levelscore/kernels.hpp"

namespace levelscore {

LevelGrid::LevelGrid(std::vector<double> levels, double score_max, std::vector<std::string> names)
    : levels_(std::move(levels)), score_max_(score_max), names_(std::move(names)) {
  if (levels_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a level grid needs at least two levels");
  }
  if (!std::isfinite(score_max_) || score_max_ <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "score_max must be finite and positive");
  }
  for (double l : levels_) {
    if (!std::isfinite(l) || l < 0.0 || l > score_max_) {
      throw Error(ErrorCode::kInvalidArgument, "levels must lie within [0, score_max]");
    }
  }
  bin_width_ = levels_[1] - levels_[0];
  if (bin_width_ <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "levels must be strictly increasing");
  }
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    const double gap = levels_[i] - levels_[i - 1];
    if (gap <= 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "levels must be strictly increasing");
    }
    if (std::abs(gap - bin_width_) > kUniformSpacingTol) {
      throw Error(ErrorCode::kInvalidArgument, "levels must be uniformly spaced");
    }
  }
  if (!names_.empty() && names_.size() != levels_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "level names must match the number of levels");
  }
}

LevelGrid LevelGrid::uniform(std::size_t k, double first, double step, double score_max,
                             std::vector<std::string> names) {
  std::vector<double> levels(k);
  for (std::size_t i = 0; i < k; ++i) levels[i] = first + step * static_cast<double>(i);
  return LevelGrid(std::move(levels), score_max, std::move(names));
}

LevelGrid LevelGrid::default_five() {
  return uniform(5, 1.0, 1.0, 5.0, {"bad", "poor", "fair", "good", "excellent"});
}

LevelGrid LevelGrid::shifted(double offset) const {
  std::vector<double> moved(levels_);
  for (double& l : moved) l += offset;
  return LevelGrid(std::move(moved), score_max_ + std::max(offset, 0.0), names_);
}

ScoreDistribution::ScoreDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "a distribution needs at least one entry");
  }
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "probabilities must be finite and non-negative");
    }
  }
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  const double drift = std::abs(total - 1.0);
  if (drift > kRenormalizeTol) {
    throw Error(ErrorCode::kInvalidArgument,
                "probabilities sum to " + std::to_string(total) + ", expected 1");
  }
  if (drift > kNormalizationTol) {
    for (double& p : probs_) p /= total;
  }
}

ScoreDistribution ScoreDistribution::one_hot(std::size_t k, std::size_t index) {
  if (index >= k) throw Error(ErrorCode::kOutOfRange, "one-hot index outside the distribution");
  std::vector<double> p(k, 0.0);
  p[index] = 1.0;
  return ScoreDistribution(std::move(p));
}

ScoreDistribution ScoreDistribution::uniform(std::size_t k) {
  return ScoreDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

double decode_score(const ScoreDistribution& dist, const LevelGrid& grid) {
  if (dist.size() != grid.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "distribution has " + std::to_string(dist.size()) + " entries but grid has " +
                    std::to_string(grid.size()) + " levels");
  }
  const double x = kernels::dot(dist.probs(), grid.levels());
  return std::clamp(x, grid.front(), grid.back());
}

std::size_t nearest_level(double x, const LevelGrid& grid) {
  if (!std::isfinite(x) || x < grid.score_min() || x > grid.score_max()) {
    throw Error(ErrorCode::kOutOfRange,
                "score " + std::to_string(x) + " outside [0, " + std::to_string(grid.score_max()) +
                    "]");
  }
  std::size_t best = 0;
  double best_dist = std::abs(grid.level(0) - x);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = std::abs(grid.level(i) - x);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

ScoreRescale ScoreRescale::onto(const LevelGrid& grid, double source_min, double source_max) {
  if (!(source_max > source_min)) {
    throw Error(ErrorCode::kInvalidArgument, "rescale source range must be non-empty");
  }
  return {source_min, source_max, grid.front(), grid.back()};
}

ScoreRescale ScoreRescale::identity(const LevelGrid& grid) {
  return {grid.front(), grid.back(), grid.front(), grid.back()};
}

double ScoreRescale::forward(double source) const noexcept {
  return target_min + (source - source_min) * (target_max - target_min) / (source_max - source_min);
}

double ScoreRescale::inverse(double target) const noexcept {
  return source_min + (target - target_min) * (source_max - source_min) / (target_max - target_min);
}

}  // namespace levelscore
