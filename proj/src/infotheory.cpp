#include "levelscore/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "levelscore/error.hpp"
#include "levelscore/parallel.hpp"

namespace levelscore::info {
namespace {

void check_alphabet(std::size_t n, const char* name) {
  if (n < kMinAlphabet || n > kMaxAlphabet) {
    throw Error(ErrorCode::kInvalidArgument, std::string("alphabet |") + name + "| = " +
                                                 std::to_string(n) + " outside [2, 64]");
  }
}

}  // namespace

FiniteJoint::FiniteJoint(std::size_t ny, std::size_t nd, std::size_t nz, std::vector<double> table)
    : ny_(ny), nd_(nd), nz_(nz), table_(std::move(table)) {
  check_alphabet(ny_, "Y");
  check_alphabet(nd_, "D");
  check_alphabet(nz_, "Z");
  if (table_.size() != ny_ * nd_ * nz_) {
    throw Error(ErrorCode::kDimensionMismatch, "joint table size does not match |Y||D||Z|");
  }
  double total = 0.0;
  for (double p : table_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "joint entries must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument,
                "joint table sums to " + std::to_string(total) + ", expected 1");
  }
}

FiniteJoint FiniteJoint::from_weights(std::size_t ny, std::size_t nd, std::size_t nz,
                                      std::vector<double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::kInvalidArgument, "joint weights must have positive finite mass");
  }
  for (double& w : weights) w /= total;
  return FiniteJoint(ny, nd, nz, std::move(weights));
}

std::size_t FiniteJoint::alphabet(Var v) const noexcept {
  switch (v) {
    case Var::kY:
      return ny_;
    case Var::kD:
      return nd_;
    case Var::kZ:
      return nz_;
  }
  return 0;
}

std::vector<double> FiniteJoint::marginal(VarSet keep) const {
  const std::size_t sy = keep.contains(Var::kY) ? ny_ : 1;
  const std::size_t sd = keep.contains(Var::kD) ? nd_ : 1;
  const std::size_t sz = keep.contains(Var::kZ) ? nz_ : 1;
  std::vector<double> out(sy * sd * sz, 0.0);
  for (std::size_t y = 0; y < ny_; ++y) {
    const std::size_t iy = sy == 1 ? 0 : y;
    for (std::size_t d = 0; d < nd_; ++d) {
      const std::size_t id = sd == 1 ? 0 : d;
      for (std::size_t z = 0; z < nz_; ++z) {
        const std::size_t iz = sz == 1 ? 0 : z;
        out[(iy * sd + id) * sz + iz] += at(y, d, z);
      }
    }
  }
  return out;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double joint_entropy(const FiniteJoint& joint, VarSet vars) {
  if (vars.bits() == 0) return 0.0;
  return entropy(joint.marginal(vars));
}

double conditional_entropy(const FiniteJoint& joint, VarSet target, VarSet given) {
  if (target.bits() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "conditional entropy needs a target variable");
  }
  if (target.intersects(given)) {
    throw Error(ErrorCode::kInvalidArgument, "target and conditioning sets must be disjoint");
  }
  const double h = joint_entropy(joint, target | given) - joint_entropy(joint, given);
  return std::max(h, 0.0);
}

double binary_entropy(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw Error(ErrorCode::kParameter, "binary entropy argument must lie in [0, 1]");
  }
  if (eps == 0.0 || eps == 1.0) return 0.0;
  return -eps * std::log(eps) - (1.0 - eps) * std::log1p(-eps);
}

double epsilon_independence(const FiniteJoint& joint) {
  const std::size_t ny = joint.ny(), nd = joint.nd(), nz = joint.nz();
  const std::vector<double> p_yd = joint.marginal({Var::kY, Var::kD});
  const std::vector<double> p_d = joint.marginal({Var::kD});
  const std::vector<double> p_dz = joint.marginal({Var::kD, Var::kZ});
  double eps = 0.0;
  for (std::size_t d = 0; d < nd; ++d) {
    if (!(p_d[d] > 0.0)) continue;
    for (std::size_t z = 0; z < nz; ++z) {
      const double w = p_dz[d * nz + z];
      if (!(w > 0.0)) continue;
      double tv = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        tv += std::abs(joint.at(y, d, z) / w - p_yd[y * nd + d] / p_d[d]);
      }
      eps += w * 0.5 * tv;
    }
  }
  return std::clamp(eps, 0.0, 1.0);
}

BoundReport bound_terms(const FiniteJoint& joint) {
  BoundReport r;
  r.h_y_given_z = conditional_entropy(joint, {Var::kY}, {Var::kZ});
  r.h_d_given_z = conditional_entropy(joint, {Var::kD}, {Var::kZ});
  r.h_y_given_dz = conditional_entropy(joint, {Var::kY}, {Var::kD, Var::kZ});
  r.h_y_given_d = conditional_entropy(joint, {Var::kY}, {Var::kD});
  r.epsilon = epsilon_independence(joint);
  r.h2_epsilon = binary_entropy(r.epsilon);
  r.eps_log_y = r.epsilon * std::log(static_cast<double>(joint.ny()));
  return r;
}

BoundReport check_theorem_1(const FiniteJoint& joint) { return bound_terms(joint); }

BoundReport check_theorem_2(const FiniteJoint& joint, double tol) {
  BoundReport r = bound_terms(joint);
  if (r.epsilon > tol) {
    throw Error(ErrorCode::kHypothesisNotMet,
                "conditional independence hypothesis not met: measured eps = " +
                    std::to_string(r.epsilon) + " exceeds tol = " + std::to_string(tol));
  }
  return r;
}

BoundReport check_theorem_3(const FiniteJoint& joint) { return bound_terms(joint); }

double theorem_2_allowance(const FiniteJoint& joint, double tol) {
  const double t = std::clamp(tol, 0.0, 0.5);
  return kBoundSlackTol + t * std::log(static_cast<double>(joint.ny())) + binary_entropy(t);
}

bool theorem_1_holds(const BoundReport& r) noexcept { return r.slack1() >= -kBoundSlackTol; }

bool theorem_2_holds(const BoundReport& r, double allowance) noexcept {
  return r.slack2() >= -allowance;
}

bool theorem_3_holds(const BoundReport& r) noexcept { return r.slack3() >= -kBoundSlackTol; }

FiniteJoint sample_dirichlet_joint(std::size_t ny, std::size_t nd, std::size_t nz,
                                   std::mt19937_64& rng) {
  std::exponential_distribution<double> gamma1(1.0);
  std::vector<double> w(ny * nd * nz);
  for (double& v : w) v = gamma1(rng);
  return FiniteJoint::from_weights(ny, nd, nz, std::move(w));
}

FiniteJoint sample_markov_joint(std::size_t ny, std::size_t nd, std::size_t nz,
                                std::mt19937_64& rng) {
  std::exponential_distribution<double> gamma1(1.0);
  std::vector<double> p_dz(nd * nz);
  for (double& v : p_dz) v = gamma1(rng);
  const double total = std::accumulate(p_dz.begin(), p_dz.end(), 0.0);
  for (double& v : p_dz) v /= total;

  std::vector<double> p_y_given_d(ny * nd);
  for (std::size_t d = 0; d < nd; ++d) {
    double col = 0.0;
    for (std::size_t y = 0; y < ny; ++y) col += p_y_given_d[y * nd + d] = gamma1(rng);
    for (std::size_t y = 0; y < ny; ++y) p_y_given_d[y * nd + d] /= col;
  }

  std::vector<double> table(ny * nd * nz);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t z = 0; z < nz; ++z)
        table[(y * nd + d) * nz + z] = p_y_given_d[y * nd + d] * p_dz[d * nz + z];
  return FiniteJoint::from_weights(ny, nd, nz, std::move(table));
}

SweepResult run_bound_sweep(const SweepConfig& config) {
  SweepResult out;
  const std::size_t total = config.trials + config.ci_trials;
  out.trials.resize(total);

  parallel_for(total, [&](std::size_t i) {
    SweepTrial& t = out.trials[i];
    t.index = i;
    t.seed = derive_seed(config.seed, i);
    t.conditional_independent = i >= config.trials;
    std::mt19937_64 rng(t.seed);
    if (!t.conditional_independent) {
      t.report = bound_terms(sample_dirichlet_joint(config.ny, config.nd, config.nz, rng));
      return;
    }
    // Rejection-sample until the measured eps satisfies the hypothesis; the
    // Markov construction satisfies it up to rounding.
    for (;;) {
      FiniteJoint joint = sample_markov_joint(config.ny, config.nd, config.nz, rng);
      if (epsilon_independence(joint) <= config.ci_tol) {
        t.report = check_theorem_2(joint, config.ci_tol);
        return;
      }
    }
  }, config.threads);

  SweepSummary& s = out.summary;
  s.trials = config.trials;
  s.ci_trials = config.ci_trials;
  s.min_slack1 = s.min_slack2 = s.min_slack3 = std::numeric_limits<double>::infinity();
  const double log_y = std::log(static_cast<double>(config.ny));
  const double t2_allowance = kBoundSlackTol + std::clamp(config.ci_tol, 0.0, 0.5) * log_y +
                              binary_entropy(std::clamp(config.ci_tol, 0.0, 0.5));
  for (const SweepTrial& t : out.trials) {
    const BoundReport& r = t.report;
    if (!t.conditional_independent) {
      if (!theorem_1_holds(r)) ++s.theorem1_violations;
      if (!theorem_3_holds(r)) ++s.theorem3_violations;
      s.min_slack1 = std::min(s.min_slack1, r.slack1());
      s.min_slack3 = std::min(s.min_slack3, r.slack3());
      s.mean_slack3 += r.slack3();
      s.max_epsilon = std::max(s.max_epsilon, r.epsilon);
    } else {
      if (!theorem_2_holds(r, t2_allowance)) ++s.theorem2_violations;
      s.min_slack2 = std::min(s.min_slack2, r.slack2());
      s.max_eps0_t2_t3_gap = std::max(s.max_eps0_t2_t3_gap, std::abs(r.slack3() - r.slack2()));
    }
  }
  if (config.trials > 0) {
    s.mean_slack3 /= static_cast<double>(config.trials);
    s.theorem3_violation_rate =
        static_cast<double>(s.theorem3_violations) / static_cast<double>(config.trials);
  }
  if (config.trials == 0) s.min_slack1 = s.min_slack3 = 0.0;
  if (config.ci_trials == 0) s.min_slack2 = 0.0;
  return out;
}

}  // namespace levelscore::info
