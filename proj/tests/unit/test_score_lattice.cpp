#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "levelscore/error.hpp"
#include "levelscore/score_lattice.hpp"

using levelscore::decode_score;
using levelscore::Error;
using levelscore::ErrorCode;
using levelscore::LevelGrid;
using levelscore::nearest_level;
using levelscore::ScoreDistribution;
using levelscore::ScoreRescale;

namespace {

ScoreDistribution random_dist(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(k);
  double total = 0.0;
  for (double& x : v) total += x = e(rng);
  for (double& x : v) x /= total;
  return ScoreDistribution(v);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kNumeric;
}

}  // namespace

TEST(LevelGrid, DefaultFive) {
  const LevelGrid g = LevelGrid::default_five();
  EXPECT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.bin_width(), 1.0);
  EXPECT_DOUBLE_EQ(g.score_max(), 5.0);
  EXPECT_DOUBLE_EQ(g.midpoint(), 3.0);
}

TEST(LevelGrid, RejectsBadShapes) {
  EXPECT_EQ(code_of([] { LevelGrid({1.0}, 5.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { LevelGrid({1.0, 2.0, 4.0}, 5.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { LevelGrid({2.0, 1.0}, 5.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { LevelGrid({1.0, 2.0}, 1.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { LevelGrid({1.0, 2.0}, 5.0, {"a"}); }), ErrorCode::kInvalidArgument);
}

TEST(LevelGrid, UniformBuildsConfigurableK) {
  const LevelGrid g = LevelGrid::uniform(10, 0.5, 1.0, 10.0);
  EXPECT_EQ(g.size(), 10u);
  EXPECT_DOUBLE_EQ(g.back(), 9.5);
}

TEST(ScoreDistribution, RenormalizesSmallDriftAndRejectsLarge) {
  const ScoreDistribution d({0.5, 0.5 + 5e-7});
  EXPECT_NEAR(d[0] + d[1], 1.0, 1e-15);
  EXPECT_THROW(ScoreDistribution({0.5, 0.6}), Error);
  EXPECT_THROW(ScoreDistribution({-0.1, 1.1}), Error);
  EXPECT_THROW(ScoreDistribution(std::vector<double>{}), Error);
}

TEST(DecodeScore, OneHotAndUniform) {
  const LevelGrid g = LevelGrid::default_five();
  EXPECT_DOUBLE_EQ(decode_score(ScoreDistribution::one_hot(5, 2), g), 3.0);
  EXPECT_DOUBLE_EQ(decode_score(ScoreDistribution::uniform(5), g), 3.0);
}

TEST(DecodeScore, RejectsDimensionMismatch) {
  EXPECT_EQ(code_of([] { decode_score(ScoreDistribution::uniform(4), LevelGrid::default_five()); }),
            ErrorCode::kDimensionMismatch);
}

TEST(DecodeScore, LinearInDistribution) {
  const LevelGrid g = LevelGrid::default_five();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const ScoreDistribution p = random_dist(5, rng), q = random_dist(5, rng);
    const double a = u(rng);
    std::vector<double> mix(5);
    for (std::size_t i = 0; i < 5; ++i) mix[i] = a * p[i] + (1 - a) * q[i];
    EXPECT_NEAR(decode_score(ScoreDistribution(mix), g),
                a * decode_score(p, g) + (1 - a) * decode_score(q, g), 1e-12);
  }
}

TEST(DecodeScore, StaysWithinLevelRange) {
  const LevelGrid g = LevelGrid::uniform(7, 0.5, 0.75, 6.0);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 500; ++t) {
    const double v = decode_score(random_dist(7, rng), g);
    EXPECT_GE(v, g.front());
    EXPECT_LE(v, g.back());
  }
}

TEST(DecodeScore, ShiftEquivariant) {
  const LevelGrid g = LevelGrid::default_five();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> shift(-0.9, 3.0);
  for (int t = 0; t < 100; ++t) {
    const ScoreDistribution p = random_dist(5, rng);
    const double c = shift(rng);
    EXPECT_NEAR(decode_score(p, g.shifted(c)), decode_score(p, g) + c, 1e-12);
  }
}

TEST(NearestLevel, ExamplesAndTieRule) {
  const LevelGrid g = LevelGrid::default_five();
  EXPECT_EQ(nearest_level(3.0, g), 2u);
  EXPECT_EQ(nearest_level(3.5, g), 2u);
  EXPECT_EQ(nearest_level(4.9, g), 4u);
  EXPECT_EQ(nearest_level(0.0, g), 0u);
  EXPECT_EQ(nearest_level(5.0, g), 4u);
  EXPECT_EQ(code_of([&] { nearest_level(5.1, g); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { nearest_level(-0.1, g); }), ErrorCode::kOutOfRange);
}

TEST(ScoreRescale, RoundTrips) {
  const ScoreRescale r = ScoreRescale::onto(LevelGrid::default_five(), 0.0, 10.0);
  EXPECT_DOUBLE_EQ(r.forward(0.0), 1.0);
  EXPECT_DOUBLE_EQ(r.forward(10.0), 5.0);
  EXPECT_NEAR(r.inverse(r.forward(3.3)), 3.3, 1e-14);
  EXPECT_THROW(ScoreRescale::onto(LevelGrid::default_five(), 1.0, 1.0), Error);
}
