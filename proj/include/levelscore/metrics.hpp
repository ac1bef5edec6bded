#pragma once

// Linear (PLCC) and rank (SROCC) correlation between predicted and
// ground-truth scores. Degenerate inputs raise kDegenerateInput instead of
// returning 0.

#include <span>
#include <vector>

namespace levelscore {

class PairedScores {
 public:
  /// Requires equal lengths n >= 2 and finite values.
  PairedScores(std::vector<double> predicted, std::vector<double> ground_truth);

  std::span<const double> predicted() const noexcept { return predicted_; }
  std::span<const double> ground_truth() const noexcept { return ground_truth_; }
  std::size_t size() const noexcept { return predicted_.size(); }

 private:
  std::vector<double> predicted_;
  std::vector<double> ground_truth_;
};

double plcc(const PairedScores& pairs);
double srocc(const PairedScores& pairs);

/// Fractional ranks starting at 1; tied values share the mean of their ranks.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson correlation of two equal-length vectors.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace levelscore
