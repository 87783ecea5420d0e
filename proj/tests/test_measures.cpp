#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>

#include "waa/measures.hpp"

using namespace waa;

TEST(FiniteMeasure, CanonicalForm) {
  auto m = FiniteMeasure::from_atoms({{0.5, 0.25}, {0.0, 0.5}, {0.5, 0.25}, {1.0, 0.0}});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.atoms()[0], (Atom{0.0, 0.5}));
  EXPECT_EQ(m.atoms()[1], (Atom{0.5, 0.5}));
  EXPECT_EQ(m.repr(), "0:0.5;0.5:0.5");
  EXPECT_DOUBLE_EQ(m.mean(), 0.25);
}

TEST(FiniteMeasure, RejectsBadMass) {
  EXPECT_THROW(FiniteMeasure::from_atoms({{0.0, 0.5}}), invalid_argument_error);
  EXPECT_THROW(FiniteMeasure::from_atoms({{0.0, -0.5}, {1.0, 1.5}}), invalid_argument_error);
  EXPECT_THROW(FiniteMeasure::from_atoms({}), invalid_argument_error);
}

TEST(FiniteMeasure, ExpectedLoss) {
  auto m = FiniteMeasure::from_atoms({{0.0, 0.5}, {1.0, 0.5}});
  EXPECT_DOUBLE_EQ(expected_loss(m, LossFunction::square(), 0.0), 0.5);
  EXPECT_DOUBLE_EQ(expected_loss(m, LossFunction::square(), 0.5), 0.25);
  EXPECT_DOUBLE_EQ(expected_loss(lift(0.3), LossFunction::absolute(), 0.5), 0.2);
}

TEST(Mix, WeightsAndMerging) {
  std::array<FiniteMeasure, 2> ms{lift(0.0), FiniteMeasure::from_atoms({{0.0, 0.5}, {1.0, 0.5}})};
  std::array<double, 2> w{0.5, 0.5};
  auto m = mix(w, ms);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.atoms()[0].mass, 0.75);
  EXPECT_DOUBLE_EQ(m.atoms()[1].mass, 0.25);
  std::array<double, 2> bad{0.5, 0.4};
  EXPECT_THROW(mix(bad, ms), invalid_argument_error);
}

// Mixing in two stages equals mixing at once.
TEST(Mix, Associative) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::array<FiniteMeasure, 3> ms;
    for (auto& m : ms) {
      const double a = std::round(uniform01(rng) * 8) / 8, b = std::round(uniform01(rng) * 8) / 8;
      const double p = uniform01(rng);
      m = FiniteMeasure::from_atoms({{a, p}, {b, 1.0 - p}});
    }
    const double w0 = uniform01(rng) / 2, w1 = uniform01(rng) / 2, w2 = 1.0 - w0 - w1;
    std::array<double, 3> w{w0, w1, w2};
    auto direct = mix(w, ms);
    std::array<FiniteMeasure, 2> inner{ms[0], ms[1]};
    std::array<double, 2> iw{w0 / (w0 + w1), w1 / (w0 + w1)};
    std::array<FiniteMeasure, 2> outer{mix(iw, inner), ms[2]};
    std::array<double, 2> ow{w0 + w1, w2};
    auto staged = mix(ow, outer);
    ASSERT_EQ(direct.size(), staged.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
      EXPECT_NEAR(direct.atoms()[i].point, staged.atoms()[i].point, 1e-12);
      EXPECT_NEAR(direct.atoms()[i].mass, staged.atoms()[i].mass, 1e-12);
    }
  }
}

TEST(Sample, BernoulliFrequency) {
  Rng rng(2024);
  auto m = FiniteMeasure::from_atoms({{0.0, 0.5}, {1.0, 0.5}});
  int ones = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ones += sample(m, rng) == 1.0;
  const double f = static_cast<double>(ones) / draws;
  EXPECT_GE(f, 0.494);
  EXPECT_LE(f, 0.506);
}

// Pearson chi-square against the upper 1e-4 critical value (scipy, frozen).
TEST(Sample, ChiSquare) {
  const std::array<double, 8> crit{0, 15.136705, 18.420681, 21.107513, 23.512742, 25.744832, 27.856341, 29.877504};
  Rng rng(99);
  for (std::size_t k = 2; k <= 8; ++k) {
    std::vector<Atom> atoms;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += static_cast<double>(i + 1);
    for (std::size_t i = 0; i < k; ++i) atoms.push_back({static_cast<double>(i) / 8.0, (i + 1) / total});
    auto m = FiniteMeasure::from_atoms(atoms);
    std::map<double, int> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[sample(m, rng)];
    double chi2 = 0.0;
    for (const auto& a : m.atoms()) {
      const double expected = a.mass * draws;
      const double d = counts[a.point] - expected;
      chi2 += d * d / expected;
    }
    EXPECT_LT(chi2, crit[k - 1]) << "k = " << k;
  }
}

TEST(FortetMourier, TwoPointClosedForm) {
  auto sq = LossFunction::square();
  for (double a : {0.0, 0.1, 0.3}) {
    for (double b : {0.5, 0.8, 1.0}) {
      const double rho = pseudo_metric(sq, a, b);
      EXPECT_NEAR(fm_distance(lift(a), lift(b), sq), 2 * rho / (rho + 2), 1e-12);
    }
  }
}

// Generic LP solved independently (scipy HiGHS).
TEST(FortetMourier, Oracles) {
  auto sq = LossFunction::square();
  auto m = [](std::vector<Atom> a) { return FiniteMeasure::from_atoms(std::move(a)); };
  EXPECT_NEAR(fm_distance(m({{0, .5}, {1, .5}}), m({{.5, 1}}), sq), 0.545454545455, 1e-9);
  EXPECT_NEAR(fm_distance(m({{0, .25}, {.5, .25}, {1, .5}}), m({{0, .5}, {.5, .5}}), sq), 0.291666666667, 1e-9);
  EXPECT_NEAR(fm_distance(m({{.2, .7}, {.9, .3}}), m({{.4, .4}, {.6, .6}}), sq), 0.315322580645, 1e-9);
}

TEST(FortetMourier, MetricAndLossBound) {
  Rng rng(5);
  auto sq = LossFunction::square();
  auto random_measure = [&] {
    std::vector<Atom> atoms;
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
      atoms.push_back({std::round(uniform01(rng) * 16) / 16, uniform01(rng) + 0.01});
      total += atoms.back().mass;
    }
    for (auto& a : atoms) a.mass /= total;
    return FiniteMeasure::canonical(atoms);
  };
  for (int t = 0; t < 100; ++t) {
    auto a = random_measure(), b = random_measure(), c = random_measure();
    const double ab = fm_distance(a, b, sq);
    EXPECT_NEAR(fm_distance(a, a, sq), 0.0, 1e-12);
    EXPECT_NEAR(ab, fm_distance(b, a, sq), 1e-9);
    EXPECT_LE(fm_distance(a, c, sq), ab + fm_distance(b, c, sq) + 1e-9);
    for (double y : {0.0, 0.3, 1.0})
      EXPECT_LE(std::abs(expected_loss(a, sq, y) - expected_loss(b, sq, y)), rho_bl_norm_bound(sq) * ab + 1e-9);
  }
}
