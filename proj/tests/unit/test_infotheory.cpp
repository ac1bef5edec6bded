#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "levelscore/error.hpp"
#include "levelscore/infotheory.hpp"
#include "support.hpp"

using namespace levelscore;
using namespace levelscore::info;
using levelscore::testing::fixture;
using levelscore::testing::load_json;

namespace {

// P(y, d, z) = f(y, d, z) / total for a weight function over the alphabet.
template <typename F>
FiniteJoint joint_from(std::size_t ny, std::size_t nd, std::size_t nz, F&& f) {
  std::vector<double> w(ny * nd * nz);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t z = 0; z < nz; ++z) w[(y * nd + d) * nz + z] = f(y, d, z);
  return FiniteJoint::from_weights(ny, nd, nz, std::move(w));
}

// Y copies Z with probability lambda, else uniform; D independent of both.
FiniteJoint noisy_copy(std::size_t n, std::size_t nd, double lambda) {
  return joint_from(n, nd, n, [&](std::size_t y, std::size_t, std::size_t z) {
    return lambda * (y == z) + (1.0 - lambda) / static_cast<double>(n);
  });
}

}  // namespace

TEST(FiniteJoint, Validation) {
  EXPECT_THROW(FiniteJoint(1, 2, 2, std::vector<double>(4, 0.25)), Error);
  EXPECT_THROW(FiniteJoint(2, 2, 2, std::vector<double>(7, 1.0 / 7)), Error);
  EXPECT_THROW(FiniteJoint(2, 2, 2, std::vector<double>(8, 0.2)), Error);
  std::vector<double> neg(8, 0.125);
  neg[0] = -0.125;
  neg[1] = 0.375;
  EXPECT_THROW(FiniteJoint(2, 2, 2, neg), Error);
}

TEST(ConditionalEntropy, IndependentUniformAndDeterministic) {
  const FiniteJoint u = joint_from(4, 3, 5, [](auto, auto, auto) { return 1.0; });
  EXPECT_NEAR(conditional_entropy(u, {Var::kY}, {Var::kZ}), std::log(4.0), 1e-14);
  const FiniteJoint det = joint_from(3, 2, 6, [](std::size_t y, std::size_t, std::size_t z) {
    return y == z % 3 ? 1.0 : 0.0;
  });
  EXPECT_NEAR(conditional_entropy(det, {Var::kY}, {Var::kZ}), 0.0, 1e-14);
}

TEST(ConditionalEntropy, RejectsOverlapAndEmptyTarget) {
  const FiniteJoint u = joint_from(2, 2, 2, [](auto, auto, auto) { return 1.0; });
  EXPECT_THROW(conditional_entropy(u, {Var::kY}, {Var::kY, Var::kZ}), Error);
  EXPECT_THROW(conditional_entropy(u, {}, {Var::kZ}), Error);
}

TEST(ConditionalEntropy, MatchesOracleFixture) {
  const auto c = load_json(fixture("oracles.json"))["joint_case"];
  const FiniteJoint j(c["ny"], c["nd"], c["nz"], c["table"].get<std::vector<double>>());
  const BoundReport r = bound_terms(j);
  EXPECT_NEAR(r.h_y_given_z, c["h_y_given_z"].get<double>(), 1e-13);
  EXPECT_NEAR(r.h_d_given_z, c["h_d_given_z"].get<double>(), 1e-13);
  EXPECT_NEAR(r.h_y_given_dz, c["h_y_given_dz"].get<double>(), 1e-13);
  EXPECT_NEAR(r.h_y_given_d, c["h_y_given_d"].get<double>(), 1e-13);
  EXPECT_NEAR(r.epsilon, c["epsilon"].get<double>(), 1e-13);
}

TEST(ConditionalEntropy, ChainRuleAndConditioningReduces) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 200; ++t) {
    const FiniteJoint j = sample_dirichlet_joint(4, 5, 3, rng);
    EXPECT_NEAR(conditional_entropy(j, {Var::kD, Var::kY}, {Var::kZ}),
                conditional_entropy(j, {Var::kD}, {Var::kZ}) +
                    conditional_entropy(j, {Var::kY}, {Var::kD, Var::kZ}),
                1e-12);
    EXPECT_LE(conditional_entropy(j, {Var::kY}, {Var::kZ}), joint_entropy(j, {Var::kY}) + 1e-12);
  }
}

TEST(BinaryEntropy, ValuesShapeAndDomain) {
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(binary_entropy(0.3), load_json(fixture("oracles.json"))["h2_0_3"].get<double>(),
              1e-15);
  for (int i = 1; i < 100; ++i) {
    const double e = i / 100.0;
    EXPECT_NEAR(binary_entropy(e), binary_entropy(1.0 - e), 1e-15);
    if (i > 1 && i < 99) {
      const double lo = binary_entropy(e - 0.01), hi = binary_entropy(e + 0.01);
      EXPECT_GE(binary_entropy(e), 0.5 * (lo + hi));
    }
  }
  EXPECT_THROW(binary_entropy(-0.1), Error);
  EXPECT_THROW(binary_entropy(1.1), Error);
}

TEST(EpsilonIndependence, ZeroOnMarkovChains) {
  std::mt19937_64 rng(67);
  for (int t = 0; t < 100; ++t) {
    EXPECT_LE(epsilon_independence(sample_markov_joint(5, 4, 6, rng)), 1e-12);
  }
}

TEST(EpsilonIndependence, CopyOfZIsNearMaximal) {
  for (std::size_t n : {2u, 3u, 5u}) {
    EXPECT_NEAR(epsilon_independence(noisy_copy(n, 3, 1.0)), 1.0 - 1.0 / n, 1e-14);
  }
  EXPECT_NEAR(epsilon_independence(noisy_copy(2, 2, 0.4)), 0.2, 1e-14);
}

TEST(EpsilonIndependence, ExactlyZeroOnRationalIndependentTable) {
  // P(y|d) and P(d,z) with dyadic entries: every product is exact.
  const double py_d[2][2] = {{0.25, 0.75}, {0.5, 0.5}};
  const double pdz[2][2] = {{0.125, 0.375}, {0.25, 0.25}};
  const FiniteJoint j = joint_from(
      2, 2, 2, [&](std::size_t y, std::size_t d, std::size_t z) { return py_d[d][y] * pdz[d][z]; });
  EXPECT_EQ(epsilon_independence(j), 0.0);
  EXPECT_GT(epsilon_independence(noisy_copy(2, 2, 0.25)), 0.0);
}

TEST(Theorem1, ClosedFormCases) {
  const FiniteJoint u = joint_from(3, 4, 5, [](auto, auto, auto) { return 1.0; });
  const BoundReport r = check_theorem_1(u);
  EXPECT_NEAR(r.h_y_given_z, std::log(3.0), 1e-14);
  EXPECT_NEAR(r.rhs1(), std::log(4.0) + std::log(3.0), 1e-14);
  EXPECT_NEAR(r.slack1(), std::log(4.0), 1e-14);

  std::mt19937_64 rng(71);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(3 * 3 * 4);
  for (double& v : w) v = e(rng);
  const FiniteJoint same = joint_from(3, 3, 4, [&](std::size_t y, std::size_t d, std::size_t z) {
    return y == d ? w[(y * 3 + d) * 4 + z] : 0.0;
  });
  EXPECT_NEAR(check_theorem_1(same).slack1(), 0.0, 1e-12);
}

TEST(Theorem1, HoldsOnRandomJoints) {
  std::mt19937_64 rng(73);
  for (int t = 0; t < 1000; ++t) {
    EXPECT_TRUE(theorem_1_holds(check_theorem_1(sample_dirichlet_joint(5, 8, 8, rng))));
  }
}

TEST(Theorem2, HoldsOnMarkovAndGatesOnEpsilon) {
  std::mt19937_64 rng(79);
  for (int t = 0; t < 200; ++t) {
    const FiniteJoint j = sample_markov_joint(5, 8, 8, rng);
    const BoundReport r = check_theorem_2(j, 1e-9);
    EXPECT_TRUE(theorem_2_holds(r, theorem_2_allowance(j, 1e-9)));
    EXPECT_GE(r.slack2(), -kBoundSlackTol);
  }
  try {
    check_theorem_2(noisy_copy(2, 2, 0.4), 1e-9);
    FAIL() << "expected hypothesis_not_met";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kHypothesisNotMet);
    EXPECT_NE(std::string(e.what()).find("0.2"), std::string::npos);
  }
}

TEST(Theorem3, ReducesToTheorem2AtZeroEpsilon) {
  std::mt19937_64 rng(83);
  for (int t = 0; t < 200; ++t) {
    const FiniteJoint j = sample_markov_joint(5, 8, 8, rng);
    EXPECT_NEAR(check_theorem_3(j).slack3(), check_theorem_2(j, 1e-9).slack2(), 1e-12);
  }
  const FiniteJoint u = joint_from(3, 4, 5, [](auto, auto, auto) { return 1.0; });
  const BoundReport r = check_theorem_3(u);
  EXPECT_NEAR(r.epsilon, 0.0, 1e-15);  // 1/60 entries are not exact
  EXPECT_NEAR(r.slack3(), std::log(4.0), 1e-14);
}

TEST(Theorem3, HoldsOnRandomJoints) {
  std::mt19937_64 rng(89);
  for (int t = 0; t < 1000; ++t) {
    EXPECT_TRUE(theorem_3_holds(check_theorem_3(sample_dirichlet_joint(5, 8, 8, rng))));
  }
}

TEST(BoundSweep, DeterministicAndThreadIndependent) {
  SweepConfig cfg;
  cfg.seed = 7;
  cfg.trials = 300;
  cfg.ci_trials = 50;
  cfg.threads = 1;
  const SweepResult a = run_bound_sweep(cfg);
  cfg.threads = 4;
  const SweepResult b = run_bound_sweep(cfg);
  ASSERT_EQ(a.trials.size(), 350u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].seed, b.trials[i].seed);
    EXPECT_EQ(a.trials[i].report.h_y_given_z, b.trials[i].report.h_y_given_z);
    EXPECT_EQ(a.trials[i].report.epsilon, b.trials[i].report.epsilon);
    EXPECT_EQ(a.trials[i].conditional_independent, i >= 300);
  }
  EXPECT_EQ(a.summary.theorem1_violations, 0u);
  EXPECT_EQ(a.summary.theorem2_violations, 0u);
  EXPECT_LE(a.summary.max_eps0_t2_t3_gap, 1e-12);
}

TEST(DeriveSeed, DistinctChildren) {
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
  EXPECT_NE(derive_seed(0, 0), derive_seed(1, 0));
  static_assert(derive_seed(3, 4) == derive_seed(3, 4));
}
