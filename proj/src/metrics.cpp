#include "levelscore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "levelscore/error.hpp"
#include "levelscore/kernels.hpp"

namespace levelscore {
namespace {

std::vector<double> centered(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - mean;
  return out;
}

}  // namespace

PairedScores::PairedScores(std::vector<double> predicted, std::vector<double> ground_truth)
    : predicted_(std::move(predicted)), ground_truth_(std::move(ground_truth)) {
  if (predicted_.size() != ground_truth_.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "predicted has " + std::to_string(predicted_.size()) +
                    " values, ground truth has " + std::to_string(ground_truth_.size()));
  }
  if (predicted_.size() < 2) {
    throw Error(ErrorCode::kEmptyInput, "correlation needs at least two pairs");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(predicted_.begin(), predicted_.end(), finite) ||
      !std::all_of(ground_truth_.begin(), ground_truth_.end(), finite)) {
    throw Error(ErrorCode::kInvalidArgument, "scores must be finite");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pearson inputs differ in length");
  }
  auto constant = [](std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
  };
  if (x.empty() || constant(x) || constant(y)) {
    throw Error(ErrorCode::kDegenerateInput, "correlation undefined: an input has zero variance");
  }
  const std::vector<double> cx = centered(x);
  const std::vector<double> cy = centered(y);
  const double sxx = kernels::dot(cx, cx);
  const double syy = kernels::dot(cy, cy);
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorCode::kDegenerateInput, "correlation undefined: an input has zero variance");
  }
  const double r = kernels::dot(cx, cy) / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double plcc(const PairedScores& pairs) { return pearson(pairs.predicted(), pairs.ground_truth()); }

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold one tie group; 1-based ranks i+1..j average to this.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double srocc(const PairedScores& pairs) {
  const std::vector<double> rp = fractional_ranks(pairs.predicted());
  const std::vector<double> rg = fractional_ranks(pairs.ground_truth());
  return pearson(rp, rg);
}

}  // namespace levelscore
