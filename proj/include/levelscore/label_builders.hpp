#pragma once

// Target distributions over a LevelGrid built from a scalar ground-truth score.
//
//  * gaussian_bin_label integrates N(mu, sigma) over each level's bin of width
//    d and renormalizes. Its expectation is biased toward the grid centre
//    because mass outside [l_1 - d/2, l_K + d/2] is discarded.
//  * sbde_estimate solves for Gaussian parameters whose point densities,
//    normalized over the grid, have expectation exactly equal to the target.

#include <cstddef>
#include <utility>
#include <vector>

#include "levelscore/score_lattice.hpp"

namespace levelscore {

struct GaussianParams {
  double mu = 0.0;
  double sigma = 1.0;

  /// Throws kParameter unless both values are finite and sigma > 0.
  void validate() const;
};

enum class SbdeMode {
  kFixedSigma,  // sigma held at config.sigma, mu found by bracketed root-finding
  kJoint,       // (mu, sigma) profile search with maximum-entropy tie-break
};

struct SolverConfig {
  SbdeMode mode = SbdeMode::kFixedSigma;
  /// Fixed sigma; <= 0 means "use the grid's bin width d".
  double sigma = 0.0;
  double tolerance = 1e-9;
  int max_iterations = 200;
  /// Bracket cap, as a multiple of M.
  double mu_max_factor = 100.0;
  /// Endpoint clamp distance, as a multiple of d.
  double endpoint_tol_factor = 1e-6;
  /// Joint mode search range for sigma, as multiples of d.
  double joint_sigma_min_factor = 0.25;
  double joint_sigma_max_factor = 4.0;
  int joint_scan_points = 33;
};

struct SbdeResult {
  GaussianParams params;
  ScoreDistribution dist;
  double requested_target = 0.0;  // x as given
  double target = 0.0;            // x after endpoint clamping
  bool clamped = false;
  double residual = 0.0;  // |decode_score(dist) - target|
  int iterations = 0;
  bool converged = false;
};

/// p_i proportional to the N(mu, sigma) mass on [l_i - d/2, l_i + d/2].
ScoreDistribution gaussian_bin_label(double mu, double sigma, const LevelGrid& grid);

/// p_i = phi(l_i) / sum_j phi(l_j), evaluated in log space. Returns the
/// distribution and its decoded expectation.
std::pair<ScoreDistribution, double> sbde_expectation(const GaussianParams& params,
                                                      const LevelGrid& grid);

/// Solves for a Gaussian whose grid-normalized density has expectation x.
/// Throws kUnreachableTarget when x lies outside the grid span by more than
/// the endpoint tolerance. Non-convergence is reported via `converged`.
SbdeResult sbde_estimate(double x, const LevelGrid& grid, const SolverConfig& config = {});

struct LabelErrorRow {
  double target = 0.0;
  double bin_expectation = 0.0;
  double bin_error = 0.0;
  double sbde_expectation = 0.0;
  double sbde_error = 0.0;
};

struct LabelErrorReport {
  std::vector<LabelErrorRow> rows;
  double bin_mean = 0.0;
  double bin_max = 0.0;
  double sbde_mean = 0.0;
  double sbde_max = 0.0;

  double gap() const noexcept { return bin_mean - sbde_mean; }
};

/// Compares |E[label] - x| for bin labels and fixed-sigma SBDE labels, both at
/// `sigma_fixed`. Errors are measured against the requested target.
LabelErrorReport label_error_report(std::span<const double> targets, const LevelGrid& grid,
                                    double sigma_fixed);

}  // namespace levelscore
