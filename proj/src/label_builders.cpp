#include "levelscore/label_builders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "levelscore/error.hpp"
#include "levelscore/kernels.hpp"

namespace levelscore {
namespace {

// Upper tail Q(z) = P(N(0,1) > z) and lower tail Phi(z) via erfc, which keeps
// full relative precision far into either tail.
double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
double lower_tail(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_interval_mass(double a, double b) {
  if (a >= 0.0) return upper_tail(a) - upper_tail(b);
  if (b <= 0.0) return lower_tail(b) - lower_tail(a);
  return 1.0 - upper_tail(b) - lower_tail(a);
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// Expectation and variance of the level score under the grid-normalized
// Gaussian. d E / d mu = Var / sigma^2 for this exponential family.
struct Moments {
  ScoreDistribution dist;
  double mean;
  double variance;
};

Moments moments(double mu, double sigma, const LevelGrid& grid) {
  auto [dist, mean] = sbde_expectation({mu, sigma}, grid);
  double var = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double dev = grid.level(i) - mean;
    var += dist[i] * dev * dev;
  }
  return {std::move(dist), mean, var};
}

struct FixedSolve {
  double mu = 0.0;
  ScoreDistribution dist;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Root of mu -> E[p(mu, sigma)] - target. The map is strictly increasing, so a
// sign change brackets the unique root. The bracket grows geometrically from
// mu = target and is refined by Newton steps that fall back to bisection.
FixedSolve solve_mu(double target, double sigma, const LevelGrid& grid, const SolverConfig& cfg) {
  const double mu_cap = cfg.mu_max_factor * grid.score_max();
  int evals = 0;
  auto eval = [&](double mu) {
    ++evals;
    return moments(mu, sigma, grid);
  };

  FixedSolve best{target, ScoreDistribution::uniform(grid.size())};
  auto consider = [&](double mu, const Moments& m) {
    const double r = std::abs(m.mean - target);
    if (r < best.residual) {
      best.mu = mu;
      best.dist = m.dist;
      best.residual = r;
    }
  };

  double mu = std::clamp(target, -mu_cap, mu_cap);
  Moments m = eval(mu);
  consider(mu, m);
  if (best.residual <= cfg.tolerance) {
    best.iterations = evals;
    best.converged = true;
    return best;
  }

  double lo = mu;
  double hi = mu;
  double step = grid.bin_width();
  if (m.mean < target) {
    for (;;) {
      lo = hi;
      if (hi >= mu_cap || evals >= cfg.max_iterations) {
        best.iterations = evals;
        return best;
      }
      hi = std::min(mu + step, mu_cap);
      step *= 2.0;
      Moments mh = eval(hi);
      consider(hi, mh);
      if (mh.mean >= target) break;
    }
  } else {
    for (;;) {
      hi = lo;
      if (lo <= -mu_cap || evals >= cfg.max_iterations) {
        best.iterations = evals;
        return best;
      }
      lo = std::max(mu - step, -mu_cap);
      step *= 2.0;
      Moments ml = eval(lo);
      consider(lo, ml);
      if (ml.mean <= target) break;
    }
  }

  // One extra Newton step once inside tolerance; consider() keeps the better point.
  bool polished = false;
  mu = best.mu;
  while (evals < cfg.max_iterations) {
    m = eval(mu);
    consider(mu, m);
    const double f = m.mean - target;
    if (std::abs(f) <= cfg.tolerance) {
      if (polished || f == 0.0) break;
      polished = true;
    }
    if (f < 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mu))) {
      break;
    }
    const double slope = m.variance / (sigma * sigma);
    double next = slope > 0.0 ? mu - f / slope : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    mu = next;
  }
  best.iterations = evals;
  best.converged = best.residual <= cfg.tolerance;
  return best;
}

}  // namespace

void GaussianParams::validate() const {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma <= 0.0) {
    throw Error(ErrorCode::kParameter, "gaussian parameters need finite mu and sigma > 0 (got mu=" +
                                           std::to_string(mu) +
                                           ", sigma=" + std::to_string(sigma) + ")");
  }
}

ScoreDistribution gaussian_bin_label(double mu, double sigma, const LevelGrid& grid) {
  GaussianParams{mu, sigma}.validate();
  const double half = 0.5 * grid.bin_width();
  std::vector<double> p(grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = (grid.level(i) - half - mu) / sigma;
    const double b = (grid.level(i) + half - mu) / sigma;
    p[i] = std::max(normal_interval_mass(a, b), 0.0);
    total += p[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::kNumeric, "gaussian bin mass underflows on every level");
  }
  for (double& v : p) v /= total;
  return ScoreDistribution(std::move(p));
}

std::pair<ScoreDistribution, double> sbde_expectation(const GaussianParams& params,
                                                      const LevelGrid& grid) {
  params.validate();
  std::vector<double> logd(grid.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double z = (grid.level(i) - params.mu) / params.sigma;
    logd[i] = -0.5 * z * z;
    peak = std::max(peak, logd[i]);
  }
  if (!std::isfinite(peak)) {
    throw Error(ErrorCode::kNumeric, "all level densities underflow");
  }
  double total = 0.0;
  for (double& v : logd) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : logd) v /= total;
  ScoreDistribution dist(std::move(logd));
  const double mean = decode_score(dist, grid);
  return {std::move(dist), mean};
}

SbdeResult sbde_estimate(double x, const LevelGrid& grid, const SolverConfig& config) {
  const double d = grid.bin_width();
  const double etol = config.endpoint_tol_factor * d;
  if (!std::isfinite(x) || x <= grid.front() - etol || x >= grid.back() + etol) {
    throw Error(ErrorCode::kUnreachableTarget,
                "target " + std::to_string(x) + " is outside the reachable span (" +
                    std::to_string(grid.front()) + ", " + std::to_string(grid.back()) + ")");
  }
  if (config.tolerance <= 0.0 || config.max_iterations < 1) {
    throw Error(ErrorCode::kConfig, "solver tolerance and iteration budget must be positive");
  }

  double target = x;
  bool clamped = false;
  if (target < grid.front() + etol) {
    target = grid.front() + etol;
    clamped = true;
  } else if (target > grid.back() - etol) {
    target = grid.back() - etol;
    clamped = true;
  }

  const double base_sigma = config.sigma > 0.0 ? config.sigma : d;
  SbdeResult result{{target, base_sigma}, ScoreDistribution::uniform(grid.size()), x, target,
                    clamped};

  if (config.mode == SbdeMode::kFixedSigma) {
    FixedSolve s = solve_mu(target, base_sigma, grid, config);
    result.params = {s.mu, base_sigma};
    result.dist = std::move(s.dist);
    result.iterations = s.iterations;
  } else {
    // Profile the residual-zero curve over log sigma: each sigma gets its own
    // root mu*(sigma); among converged points keep the most entropic. The
    // scan is log-spaced and symmetric about sigma = d, so the initial point
    // (mu = x, sigma = d) is always evaluated.
    const double log_lo = std::log(config.joint_sigma_min_factor * d);
    const double log_hi = std::log(config.joint_sigma_max_factor * d);
    const int n = std::max(config.joint_scan_points, 3);
    int iterations = 0;
    double best_h = -1.0;
    double best_log_sigma = std::log(d);
    FixedSolve best_solve{0.0, ScoreDistribution::uniform(grid.size())};
    auto try_sigma = [&](double log_sigma) {
      FixedSolve s = solve_mu(target, std::exp(log_sigma), grid, config);
      iterations += s.iterations;
      if (!s.converged) return -1.0;
      const double h = entropy(s.dist.probs());
      if (h > best_h) {
        best_h = h;
        best_log_sigma = log_sigma;
        best_solve = std::move(s);
      }
      return h;
    };
    for (int i = 0; i < n; ++i) {
      try_sigma(log_lo + (log_hi - log_lo) * i / (n - 1));
    }
    // Golden-section refinement on the bracket around the best scan point.
    const double cell = (log_hi - log_lo) / (n - 1);
    double a = std::max(log_lo, best_log_sigma - cell);
    double b = std::min(log_hi, best_log_sigma + cell);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 40 && b - a > 1e-10; ++it) {
      const double c = b - ratio * (b - a);
      const double e = a + ratio * (b - a);
      if (try_sigma(c) >= try_sigma(e)) {
        b = e;
      } else {
        a = c;
      }
    }
    if (best_h < 0.0) {
      FixedSolve s = solve_mu(target, d, grid, config);
      iterations += s.iterations;
      best_solve = std::move(s);
      best_log_sigma = std::log(d);
    }
    result.params = {best_solve.mu, std::exp(best_log_sigma)};
    result.dist = std::move(best_solve.dist);
    result.iterations = iterations;
  }

  result.residual = std::abs(decode_score(result.dist, grid) - target);
  result.converged = result.residual <= config.tolerance;
  return result;
}

LabelErrorReport label_error_report(std::span<const double> targets, const LevelGrid& grid,
                                    double sigma_fixed) {
  if (targets.empty()) throw Error(ErrorCode::kEmptyInput, "label error report needs targets");
  GaussianParams{grid.midpoint(), sigma_fixed}.validate();
  SolverConfig cfg;
  cfg.sigma = sigma_fixed;

  LabelErrorReport report;
  report.rows.reserve(targets.size());
  for (double x : targets) {
    if (!std::isfinite(x) || x < grid.front() || x > grid.back()) {
      throw Error(ErrorCode::kOutOfRange,
                  "report target " + std::to_string(x) + " is outside [l_1, l_K]");
    }
    LabelErrorRow row;
    row.target = x;
    row.bin_expectation = decode_score(gaussian_bin_label(x, sigma_fixed, grid), grid);
    row.bin_error = std::abs(row.bin_expectation - x);
    const SbdeResult s = sbde_estimate(x, grid, cfg);
    row.sbde_expectation = decode_score(s.dist, grid);
    row.sbde_error = std::abs(row.sbde_expectation - x);
    report.bin_mean += row.bin_error;
    report.sbde_mean += row.sbde_error;
    report.bin_max = std::max(report.bin_max, row.bin_error);
    report.sbde_max = std::max(report.sbde_max, row.sbde_error);
    report.rows.push_back(row);
  }
  report.bin_mean /= static_cast<double>(targets.size());
  report.sbde_mean /= static_cast<double>(targets.size());
  return report;
}

}  // namespace levelscore
