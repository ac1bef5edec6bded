#pragma once

// Finite joint distributions over (Y, D, Z) and brute-force checks of three
// conditional-entropy bounds relating score uncertainty H(Y|Z) to description
// quality H(D|Z) and description sufficiency H(Y|D):
//
//   (1) H(Y|Z) <= H(D|Z) + H(Y|D,Z)                           every joint
//   (2) H(Y|Z) <= H(D|Z) + H(Y|D)                             when Y _||_ Z | D
//   (3) H(Y|Z) <= H(Y|D) + eps*ln|Y| + H2(eps) + H(D|Z)       eps-approximate
//
// eps is the expected total-variation distance between P(Y|D,Z) and P(Y|D).
// Everything is in nats.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "levelscore/rng.hpp"

namespace levelscore::info {

enum class Var : unsigned { kY = 1u, kD = 2u, kZ = 4u };

/// Bit set of variables.
class VarSet {
 public:
  constexpr VarSet() = default;
  constexpr VarSet(std::initializer_list<Var> vars) {
    for (Var v : vars) bits_ |= static_cast<unsigned>(v);
  }
  constexpr bool contains(Var v) const noexcept { return (bits_ & static_cast<unsigned>(v)) != 0; }
  constexpr unsigned bits() const noexcept { return bits_; }
  constexpr VarSet operator|(VarSet o) const noexcept { return from_bits(bits_ | o.bits_); }
  constexpr bool intersects(VarSet o) const noexcept { return (bits_ & o.bits_) != 0; }
  static constexpr VarSet from_bits(unsigned b) {
    VarSet s;
    s.bits_ = b & 7u;
    return s;
  }

 private:
  unsigned bits_ = 0;
};

inline constexpr std::size_t kMinAlphabet = 2;
inline constexpr std::size_t kMaxAlphabet = 64;

/// P(y, d, z) stored y-major: index = (y * |D| + d) * |Z| + z.
class FiniteJoint {
 public:
  /// Validates alphabet sizes in [2, 64], non-negative entries, unit mass
  /// within 1e-12.
  FiniteJoint(std::size_t ny, std::size_t nd, std::size_t nz, std::vector<double> table);

  /// Normalizes non-negative weights to unit mass.
  static FiniteJoint from_weights(std::size_t ny, std::size_t nd, std::size_t nz,
                                  std::vector<double> weights);

  std::size_t ny() const noexcept { return ny_; }
  std::size_t nd() const noexcept { return nd_; }
  std::size_t nz() const noexcept { return nz_; }
  std::size_t alphabet(Var v) const noexcept;
  std::span<const double> table() const noexcept { return table_; }

  double at(std::size_t y, std::size_t d, std::size_t z) const noexcept {
    return table_[(y * nd_ + d) * nz_ + z];
  }

  /// Marginal over the variables in `keep`, laid out in (Y, D, Z) order over
  /// the kept variables only.
  std::vector<double> marginal(VarSet keep) const;

 private:
  std::size_t ny_, nd_, nz_;
  std::vector<double> table_;
};

/// Shannon entropy of a probability vector; 0 log 0 = 0.
double entropy(std::span<const double> p);

/// H(vars) of the joint's marginal over `vars`.
double joint_entropy(const FiniteJoint& joint, VarSet vars);

/// H(target | given) = H(target, given) - H(given). Throws kInvalidArgument if
/// target is empty or overlaps given.
double conditional_entropy(const FiniteJoint& joint, VarSet target, VarSet given);

/// -e ln e - (1-e) ln(1-e); throws kParameter outside [0, 1].
double binary_entropy(double eps);

/// E_{(d,z)}[ TV(P(Y|d,z), P(Y|d)) ]; zero iff Y is independent of Z given D.
double epsilon_independence(const FiniteJoint& joint);

struct BoundReport {
  double h_y_given_z = 0.0;   // left-hand side of every bound
  double h_d_given_z = 0.0;
  double h_y_given_dz = 0.0;
  double h_y_given_d = 0.0;
  double epsilon = 0.0;
  double h2_epsilon = 0.0;
  double eps_log_y = 0.0;     // epsilon * ln|Y|

  double rhs1() const noexcept { return h_d_given_z + h_y_given_dz; }
  double rhs2() const noexcept { return h_d_given_z + h_y_given_d; }
  double rhs3() const noexcept { return h_y_given_d + eps_log_y + h2_epsilon + h_d_given_z; }
  double slack1() const noexcept { return rhs1() - h_y_given_z; }
  double slack2() const noexcept { return rhs2() - h_y_given_z; }
  double slack3() const noexcept { return rhs3() - h_y_given_z; }
};

inline constexpr double kBoundSlackTol = 1e-10;

/// Evaluates every term once. The check_* functions below wrap this.
BoundReport bound_terms(const FiniteJoint& joint);

BoundReport check_theorem_1(const FiniteJoint& joint);

/// Throws kHypothesisNotMet naming the measured eps when it exceeds `tol`.
BoundReport check_theorem_2(const FiniteJoint& joint, double tol);

/// Violation allowance used by theorem_2_holds for a given hypothesis tol.
double theorem_2_allowance(const FiniteJoint& joint, double tol);

bool theorem_1_holds(const BoundReport& r) noexcept;
bool theorem_2_holds(const BoundReport& r, double allowance) noexcept;
bool theorem_3_holds(const BoundReport& r) noexcept;

BoundReport check_theorem_3(const FiniteJoint& joint);

// Random joints.

using levelscore::derive_seed;

/// Symmetric Dirichlet(1) over the full table.
FiniteJoint sample_dirichlet_joint(std::size_t ny, std::size_t nd, std::size_t nz,
                                   std::mt19937_64& rng);

/// Markov chain Z -> D -> Y: P(d, z) Dirichlet(1), P(y | d) Dirichlet(1) per d.
FiniteJoint sample_markov_joint(std::size_t ny, std::size_t nd, std::size_t nz,
                                std::mt19937_64& rng);

struct SweepConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 10000;
  std::size_t ci_trials = 1000;
  std::size_t ny = 5;
  std::size_t nd = 8;
  std::size_t nz = 8;
  double ci_tol = 1e-9;
  std::size_t threads = 0;  // 0 = all cores
};

struct SweepTrial {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool conditional_independent = false;
  BoundReport report;
};

struct SweepSummary {
  std::size_t trials = 0;
  std::size_t ci_trials = 0;
  std::size_t theorem1_violations = 0;
  std::size_t theorem2_violations = 0;
  std::size_t theorem3_violations = 0;
  double theorem3_violation_rate = 0.0;
  double min_slack1 = 0.0;
  double min_slack2 = 0.0;
  double min_slack3 = 0.0;
  double mean_slack3 = 0.0;
  double max_epsilon = 0.0;
  double max_eps0_t2_t3_gap = 0.0;  // |slack3 - slack2| over the CI trials
};

struct SweepResult {
  std::vector<SweepTrial> trials;  // Dirichlet trials, then CI trials
  SweepSummary summary;
};

/// Runs `trials` Dirichlet joints through all three checks and `ci_trials`
/// Markov-chain joints through the theorem 2 gate. Trials run in parallel;
/// results are ordered by trial index.
SweepResult run_bound_sweep(const SweepConfig& config);

}  // namespace levelscore::info
