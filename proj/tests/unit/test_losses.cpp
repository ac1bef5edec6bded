#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "levelscore/error.hpp"
#include "levelscore/losses.hpp"
#include "support.hpp"

using namespace levelscore;
using levelscore::testing::fixture;
using levelscore::testing::load_json;

namespace {

const nlohmann::json& oracles() {
  static const nlohmann::json j = load_json(fixture("oracles.json"));
  return j;
}

std::vector<double> dirichlet(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(k);
  double total = 0.0;
  for (double& x : v) total += x = e(rng);
  for (double& x : v) x /= total;
  return v;
}

// Relative error of an analytic gradient against central differences, measured
// on the whole vector so near-zero components do not dominate.
double gradient_relative_error(const std::vector<double>& analytic,
                               const std::vector<double>& numeric) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    norm += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

template <typename F>
std::vector<double> central_difference(F&& f, std::vector<double> z, double h = 1e-5) {
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double keep = z[i];
    z[i] = keep + h;
    const double up = f(z);
    z[i] = keep - h;
    const double down = f(z);
    z[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(SequenceCe, OneHotPredictionsGiveZero) {
  const std::vector<std::vector<double>> d{{0, 1, 0}, {1, 0, 0}};
  const std::vector<std::size_t> t{1, 0};
  const SequenceCe ce = sequence_ce(d, t);
  EXPECT_EQ(ce.sum, 0.0);
  EXPECT_FALSE(ce.diverged);
}

TEST(SequenceCe, UniformClosedForm) {
  const std::vector<std::vector<double>> d(3, std::vector<double>(4, 0.25));
  const std::vector<std::size_t> t{0, 3, 2};
  const SequenceCe ce = sequence_ce(d, t);
  EXPECT_NEAR(ce.sum, 3 * std::log(4.0), 1e-15);
  EXPECT_NEAR(ce.mean, std::log(4.0), 1e-15);
}

TEST(SequenceCe, MatchesOracleFixture) {
  const auto& c = oracles()["sequence_case"];
  const auto d = c["dists"].get<std::vector<std::vector<double>>>();
  const auto t = c["tokens"].get<std::vector<std::size_t>>();
  EXPECT_NEAR(sequence_ce(d, t).sum, c["sum"].get<double>(), 1e-14);
}

TEST(SequenceCe, ZeroMassOnTargetDiverges) {
  const std::vector<std::vector<double>> d{{0.0, 1.0}};
  const std::vector<std::size_t> t{0};
  const SequenceCe ce = sequence_ce(d, t);
  EXPECT_TRUE(ce.diverged);
  EXPECT_TRUE(std::isinf(ce.sum));
}

TEST(SequenceCe, RejectsBadShapes) {
  const std::vector<std::vector<double>> d{{0.5, 0.5}};
  const std::vector<std::size_t> bad{2};
  EXPECT_THROW(sequence_ce(d, bad), Error);
  const std::vector<std::size_t> two{0, 1};
  EXPECT_THROW(sequence_ce(d, two), Error);
}

TEST(KlDivergence, Examples) {
  const ScoreDistribution a({0.5, 0.5}), b({0.9, 0.1});
  EXPECT_EQ(kl_divergence(a, a).value, 0.0);
  EXPECT_NEAR(kl_divergence(a, b).value, oracles()["kl_half_vs_0_9"].get<double>(), 1e-15);
  EXPECT_NEAR(kl_divergence(a, b).value, 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1),
              1e-15);
  const LossValue inf = kl_divergence(a, ScoreDistribution({1.0, 0.0}));
  EXPECT_TRUE(inf.diverged);
  EXPECT_TRUE(std::isinf(inf.value));
}

TEST(KlDivergence, NonNegativeWithEqualityOnlyAtEquality) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 2000; ++t) {
    const ScoreDistribution p(dirichlet(5, rng)), q(dirichlet(5, rng));
    EXPECT_GT(kl_divergence(p, q).value, 0.0);
    EXPECT_LE(kl_divergence(p, p).value, 1e-12);
  }
}

TEST(ScoreCe, Examples) {
  const LevelGrid g = LevelGrid::default_five();
  EXPECT_EQ(score_ce(ScoreDistribution::one_hot(5, 3), 4.2, g).value, 0.0);
  EXPECT_NEAR(score_ce(ScoreDistribution::uniform(5), 1.7, g).value, std::log(5.0), 1e-15);
  const auto& c = oracles()["loss_case"];
  const ScoreDistribution p(c["predicted"].get<std::vector<double>>());
  EXPECT_NEAR(score_ce(p, c["x_gt"].get<double>(), g).value, c["score_ce"].get<double>(), 1e-14);
}

TEST(AslLoss, ExamplesAndAdditivity) {
  const LevelGrid g = LevelGrid::default_five();
  const ScoreDistribution oh = ScoreDistribution::one_hot(5, 2);
  EXPECT_EQ(asl_loss(oh, oh, 3.0, g, {}).value, 0.0);

  const auto& c = oracles()["loss_case"];
  const ScoreDistribution p(c["predicted"].get<std::vector<double>>());
  const ScoreDistribution t(c["target"].get<std::vector<double>>());
  const double x = c["x_gt"].get<double>();
  EXPECT_NEAR(asl_loss(p, t, x, g, {0.0, 1.0}).value, score_ce(p, x, g).value, 0.0);
  EXPECT_NEAR(asl_loss(p, t, x, g, {1.0, 1.0}).value, c["asl_k1"].get<double>(), 1e-14);
  EXPECT_NEAR(kl_divergence(t, p).value, c["kl"].get<double>(), 1e-14);
}

TEST(AslLoss, NonDecreasingInK) {
  const LevelGrid g = LevelGrid::default_five();
  std::mt19937_64 rng(37);
  for (int t = 0; t < 100; ++t) {
    const ScoreDistribution p(dirichlet(5, rng)), q(dirichlet(5, rng));
    double prev = -1.0;
    for (double k : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
      const double v = asl_loss(p, q, 2.4, g, {k, 1.0}).value;
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(AslLoss, RejectsNegativeWeights) {
  const ScoreDistribution u = ScoreDistribution::uniform(5);
  EXPECT_THROW(asl_loss(u, u, 3.0, LevelGrid::default_five(), {-1.0, 1.0}), Error);
}

TEST(MatLoss, Examples) {
  EXPECT_EQ(mat_loss(0.0, 0.0, {}), 0.0);
  EXPECT_EQ(mat_loss(1.2, 0.7, {1.0, 0.0}), 1.2);
  EXPECT_NEAR(mat_loss(1.2, 0.7, {1.0, 1.0}), 1.9, 1e-15);
  EXPECT_TRUE(std::isinf(mat_loss(1.0, INFINITY, {})));
}

TEST(LogitForms, AgreeWithDistributionForms) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> z(5);
    for (double& v : z) v = n(rng);
    const auto target = dirichlet(5, rng);
    const ScoreDistribution p(softmax(z));
    EXPECT_NEAR(kl_divergence_from_logits(target, z),
                kl_divergence(ScoreDistribution(target), p).value, 1e-12);
    EXPECT_NEAR(score_ce_from_logits(z, 3), -std::log(p[3]), 1e-12);
    const auto ls = log_softmax(z);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(std::exp(ls[i]), p[i], 1e-15);
  }
}

TEST(LogitForms, SoftmaxSurvivesHugeLogits) {
  const std::vector<double> z{1000.0, 999.0, -1000.0};
  const auto p = softmax(z);
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
}

TEST(LogitGradients, MatchCentralDifferences) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> z(5);
    for (double& v : z) v = n(rng);
    const auto target = dirichlet(5, rng);
    const std::size_t idx = static_cast<std::size_t>(t % 5);

    std::vector<double> g(5);
    kl_logit_gradient(target, z, g);
    const auto gn = central_difference(
        [&](const std::vector<double>& zz) { return kl_divergence_from_logits(target, zz); }, z);
    EXPECT_LT(gradient_relative_error(g, gn), 1e-5);

    score_ce_logit_gradient(z, idx, g);
    const auto cn = central_difference(
        [&](const std::vector<double>& zz) { return score_ce_from_logits(zz, idx); }, z);
    EXPECT_LT(gradient_relative_error(g, cn), 1e-5);
  }
}
