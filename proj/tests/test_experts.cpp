#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "waa/experts.hpp"

using namespace waa;

namespace {
ApproximationStructure interval(int m) { return {SignalSpace::unit_interval(), m}; }
}  // namespace

TEST(PredictionGrid, Uniform) {
  EXPECT_EQ(PredictionGrid::uniform(3).values(), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(PredictionGrid::uniform(1).values(), (std::vector<double>{0.5}));
  EXPECT_THROW(PredictionGrid::uniform(0), invalid_argument_error);
  EXPECT_THROW(PredictionGrid::explicit_values({0.1, 0.1}), invalid_argument_error);
}

TEST(RationalMeasures, CountAndOrder) {
  auto ms = rational_measures(PredictionGrid::uniform(3), 2);
  // compositions of 2 into 3 parts
  ASSERT_EQ(ms.size(), 6u);
  EXPECT_EQ(ms.front(), lift(0.0));
  EXPECT_EQ(ms.back(), lift(1.0));
  for (const auto& m : ms) EXPECT_NEAR(m.total_mass(), 1.0, 1e-15);
}

TEST(Pool, Sizes) {
  auto grid = PredictionGrid::uniform(2);
  EXPECT_EQ(enumerate_pool(interval(1), grid, 1).size(), 4u);
  EXPECT_EQ(enumerate_pool(interval(2), grid, 2).size(), 20u);
  EXPECT_EQ(enumerate_pool(interval(3), PredictionGrid::uniform(3), 3).size(), 9u + 81u + 6561u);
  EXPECT_EQ(enumerate_randomized_pool(interval(1), grid, 2, 1).size(), 9u);
}

TEST(Pool, TableLookup) {
  auto pool = enumerate_pool(interval(1), PredictionGrid::uniform(2), 1);
  // tables in lexicographic order: 00, 01, 10, 11
  EXPECT_EQ(pool.predict(2, {0.7}), 1.0);
  EXPECT_EQ(pool.predict(2, {0.3}), 0.0);
  EXPECT_EQ(pool.predict(3, {0.3}), 1.0);
  EXPECT_EQ(predict_expert(pool, 4, {1.0}), 1.0);
  EXPECT_THROW(pool.predict(0, {0.5}), invalid_argument_error);
  EXPECT_THROW(pool.predict(5, {0.5}), invalid_argument_error);
  EXPECT_THROW(pool.predict(1, {1.5}), domain_error);
}

// Hierarchical log priors for levels 1..3 and palette size 3 (mpmath, frozen).
TEST(Pool, HierarchicalPrior) {
  auto pool = enumerate_pool(interval(3), PredictionGrid::uniform(3), 3);
  EXPECT_NEAR(pool.log_prior(0), -2.7568403652716421, 1e-12);
  EXPECT_NEAR(pool.log_prior(9), -5.6472121231678068, 1e-12);
  EXPECT_NEAR(pool.log_prior(90), -10.734808458400191, 1e-12);
  EXPECT_NEAR(log_sum_exp(pool.log_priors()), 0.0, 1e-12);
}

TEST(Pool, CapRaisesResourceLimit) {
  try {
    enumerate_pool(interval(3), PredictionGrid::uniform(3), 3, 1000);
    FAIL() << "expected resource_limit_error";
  } catch (const resource_limit_error& e) {
    EXPECT_EQ(e.level(), 3);
  }
}

TEST(Pool, InvalidConstruction) {
  auto s = interval(1);
  EXPECT_THROW(DeterministicPool(s, {0.0}, {{1, {0}, 0.0}}), invalid_argument_error);
  EXPECT_THROW(DeterministicPool(s, {0.0}, {{1, {0, 1}, 0.0}}), invalid_argument_error);
  EXPECT_THROW(DeterministicPool(s, {0.0}, {{1, {0, 0}, 0.1}}), invalid_argument_error);
  EXPECT_THROW(DeterministicPool(s, {0.0}, {{1, {0, 0}, std::log(0.6)}, {1, {0, 0}, std::log(0.6)}}),
               invalid_argument_error);
  EXPECT_THROW(DeterministicPool(s, {0.0}, {}), invalid_argument_error);
}

TEST(Pool, PriorOverrides) {
  auto pool = enumerate_pool(interval(1), PredictionGrid::uniform(2), 1);
  auto changed = pool.with_prior_overrides({{1, 0.1}});
  EXPECT_NEAR(changed.log_prior(0), std::log(0.1), 1e-15);
  EXPECT_THROW(pool.with_prior_overrides({{1, 0.0}}), invalid_argument_error);
  EXPECT_THROW(pool.with_prior_overrides({{1, 0.9}}), invalid_argument_error);
  EXPECT_THROW(pool.with_prior_overrides({{9, 0.1}}), invalid_argument_error);
}

TEST(Pool, Json) {
  auto pool = enumerate_pool(interval(1), PredictionGrid::uniform(2), 1);
  auto j = pool.to_json();
  EXPECT_EQ(j["space"], "unit_interval");
  EXPECT_EQ(j["experts"].size(), 4u);
  EXPECT_EQ(j["experts"][1]["table"], nlohmann::json::array({0, 1}));
  EXPECT_EQ(j["experts"][1]["index"], 2);
  auto rp = enumerate_randomized_pool(interval(1), PredictionGrid::uniform(2), 2, 1);
  EXPECT_EQ(rp.to_json()["palette"][1], nlohmann::json::parse("[[0.0, 0.5], [1.0, 0.5]]"));
}

TEST(NearestExpert, MatchesBruteForce) {
  auto sq = LossFunction::square();
  auto structure = interval(2);
  auto pool = enumerate_pool(structure, PredictionGrid::uniform(3), 2);
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> rule(4);
    for (auto& v : rule) v = uniform01(rng);
    auto got = nearest_expert<double>(pool, 2, rule, sq);
    std::size_t best = 0;
    double best_worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool.level(i) != 2) continue;
      double worst = 0.0;
      for (std::size_t c = 0; c < 4; ++c)
        worst = std::max(worst, pseudo_metric(sq, rule[c], pool.palette()[pool.entry(i, c)]));
      if (worst < best_worst) {
        best_worst = worst;
        best = i + 1;
      }
    }
    EXPECT_EQ(got.index, best);
    EXPECT_DOUBLE_EQ(got.delta, best_worst);
  }
}

TEST(NearestExpert, ExactRuleHasZeroDelta) {
  auto pool = enumerate_pool(interval(1), PredictionGrid::uniform(3), 1);
  std::vector<double> rule{0.5, 1.0};
  auto got = nearest_expert<double>(pool, 1, rule, LossFunction::absolute());
  EXPECT_EQ(got.delta, 0.0);
  EXPECT_EQ(pool.predict(got.index, {0.2}), 0.5);
  EXPECT_EQ(pool.predict(got.index, {0.9}), 1.0);
  std::vector<double> wrong{0.5};
  EXPECT_THROW(nearest_expert<double>(pool, 1, wrong, LossFunction::absolute()), invalid_argument_error);
}
