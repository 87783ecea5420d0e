#include <gtest/gtest.h>

#include <cmath>

#include "waa/losses.hpp"
#include "waa/numeric.hpp"

using namespace waa;

TEST(Losses, BuiltinValues) {
  EXPECT_DOUBLE_EQ(LossFunction::square().evaluate(0.2, 0.7), 0.25);
  EXPECT_DOUBLE_EQ(LossFunction::absolute().evaluate(0.2, 0.7), 0.5);
  auto z = LossFunction::zero_one(0.5);
  EXPECT_EQ(z.evaluate(0.6, 0.9), 0.0);
  EXPECT_EQ(z.evaluate(0.4, 0.9), 1.0);
  EXPECT_EQ(z.evaluate(0.5, 0.5), 0.0);
}

TEST(Losses, Properties) {
  auto sq = LossFunction::square();
  EXPECT_EQ(sq.bound(), 1.0);
  EXPECT_EQ(sq.lipschitz_constant(), 2.0);
  EXPECT_TRUE(sq.is_convex());
  auto z = LossFunction::zero_one(0.5);
  EXPECT_FALSE(z.is_convex());
  EXPECT_TRUE(std::isinf(z.lipschitz_constant()));
}

TEST(Losses, OutOfDomainThrows) {
  auto sq = LossFunction::square();
  EXPECT_THROW(sq.evaluate(1.5, 0.5), domain_error);
  EXPECT_THROW(sq.evaluate(0.5, -0.1), domain_error);
  auto fin = LossFunction::square(ObservationSpace::finite({0.0, 1.0}));
  EXPECT_THROW(fin.evaluate(0.5, 0.5), domain_error);
  EXPECT_THROW(LossFunction::square(ObservationSpace::finite({2.0})), invalid_argument_error);
}

TEST(Losses, CustomTable) {
  auto t = LossFunction::custom_table({0.0, 1.0}, {0.0, 1.0}, {{0.0, 2.0}, {3.0, 0.0}});
  EXPECT_EQ(t.evaluate(1.0, 0.0), 3.0);
  EXPECT_EQ(t.bound(), 3.0);
  EXPECT_EQ(t.lipschitz_constant(), 3.0);
  EXPECT_THROW(t.evaluate(0.5, 0.0), domain_error);
  EXPECT_THROW(LossFunction::custom_table({0.0}, {0.0}, {{0.0, 1.0}}), invalid_argument_error);
  EXPECT_THROW(LossFunction::custom_table({0.0, 0.0}, {0.0}, {{0.0}, {1.0}}), invalid_argument_error);
}

TEST(PseudoMetric, ClosedForms) {
  EXPECT_DOUBLE_EQ(pseudo_metric(LossFunction::absolute(), 0.2, 0.6), 0.4);
  EXPECT_DOUBLE_EQ(pseudo_metric(LossFunction::square(), 0.0, 1.0), 1.0);
  // |0.4| * max(|0.8|, |1.2|)
  EXPECT_NEAR(pseudo_metric(LossFunction::square(), 0.2, 0.6), 0.48, 1e-15);
  EXPECT_EQ(pseudo_metric(LossFunction::zero_one(0.5), 0.1, 0.4), 0.0);
  EXPECT_EQ(pseudo_metric(LossFunction::zero_one(0.5), 0.1, 0.6), 1.0);
}

TEST(PseudoMetric, FiniteObservationsAreExhaustive) {
  auto t = LossFunction::custom_table({0.0, 0.5, 1.0}, {0.0, 1.0}, {{0, 1}, {0.25, 0.25}, {1, 0}});
  EXPECT_DOUBLE_EQ(pseudo_metric(t, 0.0, 0.5), 0.75);
  EXPECT_DOUBLE_EQ(pseudo_metric(t, 0.0, 1.0), 1.0);
  auto fn = LossFunction::custom_function([](double g, double y) { return std::abs(g - y); }, 1.0, 1.0, true);
  EXPECT_THROW(pseudo_metric(fn, 0.1, 0.2), unsupported_error);
}

// rho against a dense sweep of y on [0, 1].
TEST(PseudoMetric, MatchesBruteForceSup) {
  Rng rng(7);
  for (const auto& loss : {LossFunction::square(), LossFunction::absolute()}) {
    for (int t = 0; t < 200; ++t) {
      const double g = uniform01(rng), h = uniform01(rng);
      double sup = 0.0;
      for (int i = 0; i <= 2000; ++i) {
        const double y = i / 2000.0;
        sup = std::max(sup, std::abs(loss.evaluate(g, y) - loss.evaluate(h, y)));
      }
      EXPECT_NEAR(pseudo_metric(loss, g, h), sup, 1e-12);
    }
  }
}

TEST(PseudoMetric, Axioms) {
  Rng rng(11);
  auto sq = LossFunction::square();
  for (int t = 0; t < 500; ++t) {
    const double a = uniform01(rng), b = uniform01(rng), c = uniform01(rng);
    EXPECT_EQ(pseudo_metric(sq, a, a), 0.0);
    EXPECT_DOUBLE_EQ(pseudo_metric(sq, a, b), pseudo_metric(sq, b, a));
    EXPECT_LE(pseudo_metric(sq, a, c), pseudo_metric(sq, a, b) + pseudo_metric(sq, b, c) + 1e-15);
  }
}

TEST(BlNorm, Bounds) {
  EXPECT_EQ(bl_norm_bound(LossFunction::square()), 3.0);
  EXPECT_EQ(bl_norm_bound(LossFunction::absolute()), 2.0);
  EXPECT_THROW(bl_norm_bound(LossFunction::zero_one(0.5)), unsupported_error);
  EXPECT_EQ(rho_bl_norm_bound(LossFunction::zero_one(0.5)), 2.0);
  auto zero = LossFunction::custom_function([](double, double) { return 0.0; }, 0.0, 0.0, true);
  EXPECT_EQ(bl_norm_bound(zero), 0.0);
  EXPECT_EQ(rho_bl_norm_bound(zero), 0.0);
}
