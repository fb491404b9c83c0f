#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "bimh/imh.hpp"
#include "bimh/models.hpp"

using namespace bimh;

TEST(ToyModel, LogWeightAtZeroAndOne) {
  const auto m = toy_model();
  EXPECT_DOUBLE_EQ(m.log_weight(Point{0.0}), 0.0);
  EXPECT_NEAR(m.log_weight(Point{1.0}), std::log(2.0) - 0.5, 1e-15);
  EXPECT_NEAR(m.log_weight(Point{1.0}), 0.19315, 1e-5);
  EXPECT_EQ(m.dimension, 1u);
}

TEST(ToyModel, LogWeightIsSymmetric) {
  const auto m = toy_model();
  for (double x : {0.1, 0.7, 2.5, 13.0, 1e3})
    EXPECT_DOUBLE_EQ(m.log_weight(Point{x}), m.log_weight(Point{-x}));
}

TEST(ToyModel, WeightRatiosIgnoreConstants) {
  auto m = toy_model();
  auto shifted = toy_model();
  shifted.log_target = [](const Point& x) { return -0.5 * x[0] * x[0] + 123.25; };
  shifted.log_proposal = [](const Point& x) { return -std::log1p(x[0] * x[0]) - std::log(M_PI); };
  for (double a : {-3.0, -0.5, 0.0, 1.2})
    for (double b : {-2.0, 0.3, 4.0}) {
      const double d0 = m.log_weight(Point{a}) - m.log_weight(Point{b});
      const double d1 = shifted.log_weight(Point{a}) - shifted.log_weight(Point{b});
      EXPECT_NEAR(d0, d1, 1e-12);
      EXPECT_NEAR(std::exp(d0), (1 + a * a) * std::exp(-a * a / 2) / ((1 + b * b) * std::exp(-b * b / 2)),
                  1e-12);
    }
}

TEST(ModelPair, NonFiniteProposalDensityThrows) {
  auto m = toy_model();
  m.log_proposal = [](const Point&) { return -std::numeric_limits<double>::infinity(); };
  EXPECT_THROW(m.log_weight(Point{1.0}), NonFiniteDensity);
}

TEST(ModelPair, CountsTargetEvaluations) {
  const auto m = toy_model();
  m.log_weight(Point{0.5});
  m.log_weight(Point{-0.5});
  EXPECT_EQ(m.target_evaluations(), 2u);
  m.reset_target_evaluations();
  EXPECT_EQ(m.target_evaluations(), 0u);
}

TEST(ModelPair, ProposalSamplesHaveFiniteLogDensity) {
  const auto m = toy_model();
  RngStream rng(5);
  for (int i = 0; i < 10000; ++i) {
    const auto y = m.sample_proposal(rng);
    EXPECT_TRUE(std::isfinite(m.log_proposal(y)));
    EXPECT_TRUE(std::isfinite(m.log_weight(y)));
  }
}

TEST(ToyModel, LongChainMomentsMatchStandardNormal) {
  const auto m = toy_model();
  RngStream rng(11);
  const auto run = run_chain(m, Point{0.0}, 200000, rng);
  double s = 0, s2 = 0;
  for (const auto& x : run.states) {
    s += x[0];
    s2 += x[0] * x[0];
  }
  const double n = static_cast<double>(run.states.size());
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  // Integrated autocorrelation of this chain is a few units; 0.02 is > 4 se.
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}
