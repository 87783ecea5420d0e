// Plays square loss on [0,1] against a two-level pool and prints the regret
// to the best expert next to its bound.

#include <cstdio>
#include <memory>

#include "waa/harness.hpp"

int main() {
  using namespace waa;
  ApproximationStructure structure(SignalSpace::unit_interval(), 2);
  auto pool = std::make_shared<const DeterministicPool>(enumerate_pool(structure, PredictionGrid::uniform(3), 2));

  RealityScenario scenario;
  scenario.kind = ScenarioKind::iid_noise;
  scenario.noise = 0.2;
  scenario.seed = 7;
  ObservationRule step;
  step.kind = ObservationRule::Kind::step;
  step.low = 0.2;
  step.high = 0.9;
  scenario.rules = {step};

  const auto loss = LossFunction::square();
  auto reality = make_reality(scenario, structure, loss.observations());
  BenchmarkRule<double> rule{"step", 1, {0.2, 0.9}};
  auto run = run_deterministic(*reality, pool, loss, structure, rule, 5000, "noisy-step");

  const auto& t = run.trace;
  std::printf("pool %zu experts, best expert %zu\n", pool->size(), t.best_expert);
  std::printf("learner %.3f  best expert %.3f  rule %.3f\n", t.learner_total, t.best_expert_total, t.rule_total);
  std::printf("regret to best %.3f  <=  bound %.3f\n", t.learner_total - t.best_expert_total, t.rows.back().lemma5_bound);
  std::printf("average regret to rule %.4f, min per-round gap %.3g\n", t.average_regret(t.horizon()), t.min_lemma9_gap);
}
