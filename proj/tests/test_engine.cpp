#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <memory>

#include "waa/engine.hpp"

using namespace waa;

namespace {

ApproximationStructure interval1() { return {SignalSpace::unit_interval(), 1}; }

// Constant experts at the given points.
std::shared_ptr<const DeterministicPool> constant_pool(std::vector<double> points, std::vector<double> priors) {
  std::vector<ExpertSpec> specs;
  for (std::size_t i = 0; i < points.size(); ++i)
    specs.push_back({1, {static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(i)}, std::log(priors[i])});
  return std::make_shared<DeterministicPool>(interval1(), std::move(points), std::move(specs));
}

std::vector<RoundRecord<double>> play(DeterministicEngine& engine, std::span<const double> ys,
                                      std::vector<double>* predictions = nullptr) {
  std::vector<RoundRecord<double>> history;
  for (double y : ys) {
    const Signal x{0.3};
    auto f = engine.predict(x);
    if (predictions) predictions->push_back(f.value);
    history.push_back(engine.update(x, f, y));
  }
  return history;
}

}  // namespace

// q = (1/2, 1/2), losses (1, 0) after round 1 (mpmath, frozen).
TEST(Engine, WeightsAfterOneRound) {
  DeterministicEngine engine(constant_pool({1.0, 0.0}, {0.5, 0.5}), LossFunction::square());
  auto f = engine.predict({0.5});
  EXPECT_DOUBLE_EQ(f.value, 0.5);
  engine.update({0.5}, f, 0.0);
  auto p = engine.normalized_weights();
  EXPECT_NEAR(p[0], 0.33023845067334307, 1e-15);
  EXPECT_NEAR(p[1], 0.66976154932665693, 1e-15);
  EXPECT_NEAR(engine.predict({0.5}).value, 0.33023845067334307, 1e-15);
}

// Three constant experts, sub-probability priors (mpmath, frozen).
TEST(Engine, MixtureGapOracle) {
  auto pool = constant_pool({0.0, 1.0, 0.5}, {0.5, 0.25, 0.125});
  auto sq = LossFunction::square();
  DeterministicEngine engine(pool, sq);
  const std::array<double, 5> ys{0.2, 0.9, 0.5, 1.0, 0.0};
  std::vector<double> predictions;
  auto history = play(engine, ys, &predictions);
  const std::array<double, 5> gaps{0.32740894364493079, 0.55710548729438967, 0.79335349307921831,
                                   1.0201360449159347, 1.2590365852370404};
  const std::array<double, 5> preds{0.35714285714285714, 0.28549578984104252, 0.38541274079264948,
                                    0.38438799561170496, 0.46939299802493953};
  auto gap = lemma9_gap<double>(history, *pool, sq);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(predictions[i], preds[i], 1e-14);
    EXPECT_NEAR(gap[i], gaps[i], 1e-12);
  }
}

TEST(Engine, SingleExpertGapIsZero) {
  auto pool = constant_pool({0.4}, {1.0});
  auto sq = LossFunction::square();
  DeterministicEngine engine(pool, sq);
  const std::array<double, 6> ys{0.0, 1.0, 0.3, 0.3, 0.9, 0.1};
  auto history = play(engine, ys);
  for (double g : lemma9_gap<double>(history, *pool, sq)) EXPECT_EQ(g, 0.0);
}

TEST(Engine, Lemma5Bound) {
  EXPECT_NEAR(lemma5_bound(1.0, 0.125, 100), 47.977233701388812, 1e-12);
  EXPECT_NEAR(lemma5_bound_from_log_prior(1.0, std::log(0.125), 100), 47.977233701388812, 1e-12);
  EXPECT_THROW(lemma5_bound(1.0, 0.0, 1), invalid_argument_error);
}

TEST(Engine, IncrementalWeightsMatchFromScratch) {
  auto pool = std::make_shared<const DeterministicPool>(
      enumerate_pool({SignalSpace::unit_interval(), 2}, PredictionGrid::uniform(3), 2));
  DeterministicEngine engine(pool, LossFunction::square());
  Rng rng(1);
  std::vector<double> cumulative(pool->size(), 0.0);
  for (int n = 1; n <= 100; ++n) {
    const Signal x{uniform01(rng)};
    const double y = uniform01(rng);
    auto f = engine.predict(x);
    for (std::size_t k = 0; k < pool->size(); ++k) cumulative[k] += std::pow(pool->predict(k + 1, x) - y, 2);
    engine.update(x, f, y);
  }
  auto lw = log_weights_from_scratch(pool->log_priors(), cumulative, 101);
  const double norm = log_sum_exp(lw);
  auto p = engine.normalized_weights();
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], std::exp(lw[k] - norm), 1e-12);
}

TEST(Engine, Sequencing) {
  DeterministicEngine engine(constant_pool({0.0, 1.0}, {0.5, 0.5}), LossFunction::square());
  auto f = engine.predict({0.2});
  EXPECT_THROW(engine.update({0.7}, f, 0.0), sequencing_error);
  engine.update({0.2}, f, 0.0);
  EXPECT_THROW(engine.update({0.2}, f, 0.0), sequencing_error);
  engine.predict({0.2});
  EXPECT_THROW(engine.update({0.2}, f, 0.0), sequencing_error);
}

TEST(Engine, NonConvexLossRejected) {
  EXPECT_THROW(DeterministicEngine(constant_pool({0.0, 1.0}, {0.5, 0.5}), LossFunction::zero_one(0.5)),
               contract_error);
}

// Splitting one expert's prior over two identical copies leaves predictions unchanged.
TEST(Engine, DuplicateExpertInvariance) {
  auto sq = LossFunction::square();
  DeterministicEngine a(constant_pool({0.1, 0.8}, {0.5, 0.5}), sq);
  DeterministicEngine b(constant_pool({0.1, 0.8, 0.8}, {0.5, 0.25, 0.25}), sq);
  Rng rng(8);
  for (int n = 0; n < 50; ++n) {
    const Signal x{uniform01(rng)};
    const double y = uniform01(rng);
    auto fa = a.predict(x);
    auto fb = b.predict(x);
    EXPECT_NEAR(fa.value, fb.value, 1e-13);
    a.update(x, fa, y);
    b.update(x, fb, y);
  }
}

TEST(Engine, AuditInequalitiesOnRandomRun) {
  auto pool = std::make_shared<const DeterministicPool>(
      enumerate_pool({SignalSpace::unit_interval(), 2}, PredictionGrid::uniform(3), 2));
  auto sq = LossFunction::square();
  DeterministicEngine engine(pool, sq);
  Rng rng(4);
  std::vector<RoundRecord<double>> history;
  for (int n = 0; n < 300; ++n) {
    const Signal x{uniform01(rng)};
    auto f = engine.predict(x);
    history.push_back(engine.update(x, f, uniform01(rng) < 0.5 ? 0.0 : 1.0));
  }
  auto audit = audit_history<double>(history, *pool, sq);
  EXPECT_GE(audit.min_lemma9_gap(), -1e-9);
  EXPECT_LE(audit.max_lemma5_excess(), 0.0);
  EXPECT_GE(audit.min_convexity_slack(), -1e-12);
}

TEST(Engine, RandomizedPredictionIsMixture) {
  auto structure = ApproximationStructure(SignalSpace::unit_interval(), 1);
  auto pool = std::make_shared<const RandomizedPool>(enumerate_randomized_pool(structure, PredictionGrid::uniform(2), 1, 1));
  RandomizedEngine engine(pool, LossFunction::zero_one(0.5));
  auto f = engine.predict({0.4});
  EXPECT_NEAR(f.value.total_mass(), 1.0, 1e-12);
  EXPECT_NEAR(f.value.mean(), 0.5, 1e-12);
  auto rec = engine.update({0.4}, f, 1.0);
  EXPECT_NEAR(rec.learner_loss, 0.5, 1e-12);
  // convexity holds with equality for measure predictions
  EXPECT_NEAR(rec.mixture_loss, rec.learner_loss, 1e-12);
}

TEST(MeanComparison, HoldsOnRandomInputs) {
  Rng rng(12);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t k = 1 + static_cast<std::size_t>(uniform01(rng) * 8);
    std::vector<double> q(k), losses(k);
    double mass = 0.0;
    for (auto& v : q) mass += (v = uniform01(rng) + 1e-3);
    const double scale = uniform01(rng) * 0.999 + 0.001;
    for (auto& v : q) v = std::log(v / mass * scale);
    for (auto& v : losses) v = uniform01(rng) * 20.0;
    const double x = uniform01(rng) * 0.998 + 0.001;
    const double a = uniform01(rng) * 0.998 + 0.001;
    EXPECT_TRUE(mean_comparison(q, losses, x, a).holds());
  }
  std::vector<double> q{0.0}, l{1.0};
  EXPECT_THROW(mean_comparison(q, l, 1.0, 0.5), invalid_argument_error);
}
