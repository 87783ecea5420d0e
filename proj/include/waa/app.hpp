#pragma once

// The run / verify / sweep commands behind the command-line tool.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "waa/config.hpp"
#include "waa/engine.hpp"
#include "waa/error.hpp"
#include "waa/experts.hpp"
#include "waa/harness.hpp"
#include "waa/losses.hpp"
#include "waa/measures.hpp"
#include "waa/report.hpp"
#include "waa/spaces.hpp"
#include "waa/version.hpp"

namespace waa::app {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_invariant = 3;
inline constexpr int exit_resource = 4;

// Tolerances for the per-round checks.
inline constexpr double bound_tolerance = 1e-9;
inline constexpr double convexity_tolerance = 1e-12;

struct Options {
  std::optional<std::filesystem::path> out_dir;
  std::size_t jobs = 1;   // 0: one per hardware thread
  bool svg = false;
  std::optional<std::uint64_t> seed_override;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

struct Experiment {
  ExperimentConfig config;
  std::string hash;
  ApproximationStructure structure;
  LossFunction loss;
  PredictionGrid grid;
  std::shared_ptr<const DeterministicPool> deterministic_pool;
  std::shared_ptr<const RandomizedPool> randomized_pool;

  Provenance provenance() const { return {hash, config.name}; }
  std::size_t pool_size() const {
    return deterministic_pool ? deterministic_pool->size() : randomized_pool->size();
  }
};

inline Experiment build_experiment(ExperimentConfig config) {
  require_valid(config);
  ApproximationStructure structure(make_space(config.space), config.m_max);
  LossFunction loss = make_loss(config.loss);
  PredictionGrid grid = make_grid(config);
  Experiment e{config, config_hash(config), structure, loss, grid, nullptr, nullptr};
  try {
    if (config.randomized()) {
      auto pool = enumerate_randomized_pool(structure, grid, config.pool.denominator, config.m_max, config.pool.cap);
      e.randomized_pool = std::make_shared<const RandomizedPool>(apply_prior_scheme(std::move(pool), config.pool));
    } else {
      auto pool = enumerate_pool(structure, grid, config.m_max, config.pool.cap);
      e.deterministic_pool = std::make_shared<const DeterministicPool>(apply_prior_scheme(std::move(pool), config.pool));
    }
  } catch (const invalid_argument_error& err) {
    throw config_error("pool", err.what());
  }
  return e;
}

// One (scenario, rule) game.
struct UnitResult {
  RegretTrace trace;
  double epsilon = 0.0;
  UniversalityEstimate universality;
  double horizon_regret = 0.0;        // average regret against the rule at the horizon
  double horizon_envelope = 0.0;      // max(2^-m, (L^2 e^L + ln 1/q_K)/sqrt(N) + loss gap)

  // Randomized runs only.
  std::size_t seeds = 0;
  std::size_t sup_from = 0;
  double guarantee_fraction = 1.0;
  std::optional<LilCheck> lil;
  std::vector<double> path_sup_regret;    // per seed: sup_{sup_from <= N <= horizon} sampled average regret
  std::vector<double> path_final_regret;  // per seed: sampled cumulative regret at the horizon
};

namespace detail {

inline std::unique_ptr<Reality> reality_for(const Experiment& e, const RealityScenario& s) {
  try {
    return make_reality(s, e.structure, e.loss.observations());
  } catch (const invalid_argument_error& err) {
    throw config_error("scenario." + s.name, err.what());
  } catch (const domain_error& err) {
    throw config_error("scenario." + s.name, err.what());
  }
}

inline UnitResult finish_unit(const Experiment& e, RegretTrace trace) {
  UnitResult u;
  u.epsilon = e.config.verify.epsilon.value_or(std::ldexp(1.0, -trace.level));
  const RegretTrace* one = &trace;
  u.universality = empirical_universality(std::span(one, 1), trace.level, u.epsilon, e.loss.lipschitz_constant()).at(0);
  const double n = static_cast<double>(trace.horizon());
  u.horizon_regret = (trace.learner_total - trace.rule_total) / n;
  const double rate = (trace.loss_bound * trace.loss_bound * std::exp(trace.loss_bound) - trace.nearest_log_prior) / std::sqrt(n);
  u.horizon_envelope = std::max(std::ldexp(1.0, -trace.level), rate + trace.loss_gap_factor * trace.nearest.delta);
  u.trace = std::move(trace);
  return u;
}

inline UnitResult run_unit(const Experiment& e, const RealityScenario& scenario, const RuleConfig& rule_config) {
  auto reality = reality_for(e, scenario);
  const auto& c = e.config;
  if (!c.randomized()) {
    auto rule = make_rule(c, rule_config, e.structure, *e.deterministic_pool);
    auto run = run_deterministic(*reality, e.deterministic_pool, e.loss, e.structure, rule, c.horizon, scenario.name);
    return finish_unit(e, std::move(run.trace));
  }
  auto rule = make_rule(c, rule_config, e.structure, *e.randomized_pool);
  auto run = run_randomized(*reality, e.randomized_pool, e.loss, e.structure, rule, c.seeds, c.horizon, scenario.name);
  auto u = finish_unit(e, std::move(run.mean.trace));
  u.seeds = run.paths.size();
  u.sup_from = std::min(u.universality.feasible ? u.universality.analytic_threshold : c.horizon, c.horizon);
  u.sup_from = std::max<std::size_t>(u.sup_from, 1);
  u.guarantee_fraction = randomized_guarantee_fraction(run.paths, u.sup_from, u.epsilon);
  const double lil_bound = c.verify.plant == "lil" ? e.loss.bound() / 4.0 : e.loss.bound();
  if (c.horizon >= c.verify.lil_first_round)
    u.lil = check_lil_envelope(run.paths, u.trace, lil_bound, c.verify.lil_first_round);
  for (const auto& p : run.paths) {
    u.path_sup_regret.push_back(sup_average_regret(p, u.sup_from));
    double total = 0.0;
    for (std::size_t i = 0; i < p.learner_loss.size(); ++i) total += p.learner_loss[i] - p.rule_loss[i];
    u.path_final_regret.push_back(total);
  }
  return u;
}

}  // namespace detail

// Runs every (scenario, rule) pair on up to `jobs` threads. Results come back
// in scenario-major order regardless of scheduling.
inline std::vector<UnitResult> run_units(const Experiment& e, std::size_t jobs) {
  struct Task {
    const RealityScenario* scenario;
    const RuleConfig* rule;
  };
  std::vector<Task> tasks;
  for (const auto& s : e.config.scenarios)
    for (const auto& r : e.config.rules) tasks.push_back({&s, &r});

  std::vector<std::optional<UnitResult>> results(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        results[i] = detail::run_unit(e, *tasks[i].scenario, *tasks[i].rule);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(tasks.size(), 1));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  std::vector<UnitResult> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// Checks

struct Check {
  std::string name;
  std::string statement;   // the inequality being checked
  bool passed = true;
  bool skipped = false;
  std::string detail;
  std::size_t round = 0;   // first failing round, 0 when not per-round
};

namespace detail {

inline std::string where(const UnitResult& u) { return u.trace.scenario + "/" + u.trace.rule; }

// First round where `bad(i)` holds.
template <class F>
std::size_t first_round(const RegretTrace& t, F bad) {
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (bad(i)) return i + 1;
  return 0;
}

}  // namespace detail

inline Check check_lemma9(const std::vector<UnitResult>& units) {
  Check c{"lemma9-gap", "per-round WAA gap sum_n (A_n - B_n) + C_N - L_N >= -1e-9", true, false, "", 0};
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& u : units) {
    worst = std::min(worst, u.trace.min_lemma9_gap);
    if (c.passed && u.trace.min_lemma9_gap < -bound_tolerance) {
      c.passed = false;
      c.round = detail::first_round(u.trace, [&](std::size_t i) { return u.trace.rows[i].lemma9_gap < -bound_tolerance; });
      c.detail = detail::where(u) + ": gap " + format_double(u.trace.min_lemma9_gap) + " at round " + std::to_string(c.round);
    }
  }
  if (c.passed) c.detail = "min gap " + format_double(worst) + " over " + std::to_string(units.size()) + " runs";
  return c;
}

// Planted: the bound is taken as 0, i.e. the learner must never trail the
// best expert.
inline Check check_lemma5(const std::vector<UnitResult>& units, bool planted) {
  Check c{"lemma5-bound", planted ? "L_N - L_N(K*) <= 0 (planted: bound understated to zero)"
                                  : "L_N - L_N(K) <= (L^2 e^L + ln 1/q_K) sqrt(N) + 1e-9 for every expert K",
          true, false, "", 0};
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& u : units) {
    if (planted) {
      double learner = 0, best = 0;
      for (const auto& r : u.trace.rows) {
        learner += r.learner_loss;
        best += r.best_expert_loss;
        worst = std::max(worst, learner - best);
        if (c.passed && learner - best > bound_tolerance) {
          c.passed = false;
          c.round = r.n;
          c.detail = detail::where(u) + ": L_N - L_N(K*) = " + format_double(learner - best) + " > 0 at round " + std::to_string(r.n);
        }
      }
      continue;
    }
    worst = std::max(worst, u.trace.max_lemma5_excess);
    if (c.passed && u.trace.max_lemma5_excess > bound_tolerance) {
      c.passed = false;
      c.round = u.trace.lemma5_excess_round;
      c.detail = detail::where(u) + ": excess " + format_double(u.trace.max_lemma5_excess) + " at round " + std::to_string(c.round);
    }
  }
  if (c.passed) c.detail = "max excess over the bound " + format_double(worst);
  return c;
}

// Planted: deterministic runs are held to equality, randomized runs to a
// strict inequality.
inline Check check_convexity(const std::vector<UnitResult>& units, bool randomized, bool planted) {
  const bool equality = randomized != planted;
  Check c{"countable-convexity",
          equality ? std::string("|sum_k p_k l_k - l_n| <= 1e-12 every round") + (planted ? " (planted)" : "")
                   : std::string("l_n <= sum_k p_k l_k") + (planted ? " - 1e-3 (planted)" : " + 1e-12") + " every round",
          true, false, "", 0};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& u : units) {
    lo = std::min(lo, u.trace.min_convexity_slack);
    hi = std::max(hi, u.trace.max_abs_convexity_slack);
    const bool bad = equality ? u.trace.max_abs_convexity_slack > convexity_tolerance
                              : u.trace.min_convexity_slack < (planted ? 1e-3 : -convexity_tolerance);
    if (c.passed && bad) {
      c.passed = false;
      c.detail = detail::where(u) + ": slack range [" + format_double(u.trace.min_convexity_slack) + ", max |slack| " +
                 format_double(u.trace.max_abs_convexity_slack) + "]";
    }
  }
  if (c.passed) c.detail = "slack min " + format_double(lo) + ", max |slack| " + format_double(hi);
  return c;
}

// Random instances of (sum q_k x^{L_k})^a >= sum q_k x^{a L_k}.
inline Check check_mean_comparison(std::size_t samples, double loss_bound, std::uint64_t seed) {
  Check c{"mean-comparison", "(sum_k q_k x^L_k)^a >= sum_k q_k x^(a L_k), 1e-12 relative", true, false, "", 0};
  Rng rng(seed);
  const double scale = 20.0 * std::max(loss_bound, 1.0);
  double tightest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(uniform01(rng) * 8.0);
    std::vector<double> lq(k), losses(k);
    double total = 0.0;
    for (auto& q : lq) total += (q = 1e-3 + uniform01(rng));
    const double mass = 0.05 + 0.95 * uniform01(rng);   // priors sum to mass <= 1
    for (auto& q : lq) q = std::log(q / total * mass);
    for (auto& l : losses) l = scale * uniform01(rng);
    const double x = 0.01 + 0.98 * uniform01(rng);
    const double a = 0.001 + 0.998 * uniform01(rng);
    const auto r = mean_comparison(lq, losses, x, a);
    tightest = std::min(tightest, r.log_lhs - r.log_rhs);
    if (!r.holds()) {
      c.passed = false;
      c.detail = "instance " + std::to_string(i) + ": log lhs " + format_double(r.log_lhs) + " < log rhs " + format_double(r.log_rhs);
      return c;
    }
  }
  c.detail = std::to_string(samples) + " instances, smallest log margin " + format_double(tightest);
  return c;
}

// Two-point oracle, metric axioms and the loss bound for the Fortet-Mourier
// distance on measures over the configured grid.
inline Check check_fm_metric(const LossFunction& loss, const PredictionGrid& grid, std::size_t samples, std::uint64_t seed) {
  Check c{"fm-metric",
          "beta(d_g, d_g') = 2 rho/(rho + 2); beta is a metric; |lambda(mu,y) - lambda(nu,y)| <= (1 + L) beta(mu, nu)",
          true, false, "", 0};
  Rng rng(seed);
  const auto& pts = grid.values();
  auto fail = [&](std::string what) {
    if (c.passed) c.detail = std::move(what);
    c.passed = false;
  };
  try {
    for (std::size_t i = 0; i < samples && c.passed; ++i) {
      const double g = pts[rng() % pts.size()], h = pts[rng() % pts.size()];
      const double rho = pseudo_metric(loss, g, h);
      const double beta = fm_distance(lift(g), lift(h), loss);
      if (std::abs(beta - 2.0 * rho / (rho + 2.0)) > 1e-9)
        fail("two-point distance " + format_double(beta) + " vs " + format_double(2.0 * rho / (rho + 2.0)));
    }
    auto random_measure = [&] {
      std::vector<Atom> atoms;
      const std::size_t n = 1 + rng() % std::min<std::size_t>(pts.size(), 4);
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        atoms.push_back({pts[rng() % pts.size()], 0.05 + uniform01(rng)});
        total += atoms.back().mass;
      }
      for (auto& a : atoms) a.mass /= total;
      auto m = FiniteMeasure::canonical(std::move(atoms));
      return FiniteMeasure::from_atoms(m.atoms());
    };
    const auto& obs = loss.observations();
    const double bl = rho_bl_norm_bound(loss);
    for (std::size_t i = 0; i < samples && c.passed; ++i) {
      const auto a = random_measure(), b = random_measure(), d = random_measure();
      const double ab = fm_distance(a, b, loss), ba = fm_distance(b, a, loss), bd = fm_distance(b, d, loss),
                   ad = fm_distance(a, d, loss), aa = fm_distance(a, a, loss);
      if (aa > 1e-12) fail("d(mu, mu) = " + format_double(aa));
      if (std::abs(ab - ba) > 1e-9) fail("asymmetric: " + format_double(ab) + " vs " + format_double(ba));
      if (ad > ab + bd + 1e-9) fail("triangle inequality fails: " + format_double(ad) + " > " + format_double(ab + bd));
      if (ab < -1e-12) fail("negative distance");
      const double y = obs.is_finite() ? obs.values[rng() % obs.values.size()] : uniform01(rng);
      const double diff = std::abs(expected_loss(a, loss, y) - expected_loss(b, loss, y));
      if (diff > bl * ab + 1e-9) fail("loss difference " + format_double(diff) + " exceeds " + format_double(bl * ab));
    }
  } catch (const unsupported_error& e) {
    c.skipped = true;
    c.detail = e.what();
    return c;
  }
  if (c.passed) c.detail = std::to_string(samples) + " point pairs and measure triples";
  return c;
}

inline Check check_quantizer(const ApproximationStructure& structure, std::uint64_t seed) {
  Check c{"quantizer", "phi_m idempotent, |image| = 2^m, half cell diameter as computed, cells contain their points", true, false, "", 0};
  Rng rng(seed);
  const int top = std::max(std::min(structure.supported_level_limit(), 10), structure.min_level());
  const auto& space = structure.space();
  ApproximationStructure full(space, top);
  for (int m = full.min_level(); m <= top && c.passed; ++m) {
    const auto image = full.image(m);
    if (image.size() != (std::size_t{1} << m)) {
      c.passed = false;
      c.detail = "level " + std::to_string(m) + ": image has " + std::to_string(image.size()) + " points";
    }
    for (std::size_t cell = 0; cell < image.size() && c.passed; ++cell)
      if (full.quantize(m, image[cell]) != image[cell] || full.cell_index(m, image[cell]) != cell) {
        c.passed = false;
        c.detail = "level " + std::to_string(m) + ": representative of cell " + std::to_string(cell) + " is not fixed";
      }
    const double half = full.half_max_cell_diameter(m);
    for (int i = 0; i < 200 && c.passed; ++i) {
      Signal x(space.dimension());
      if (space.kind() == SpaceKind::finite_set) x[0] = static_cast<double>(rng() % space.labels().size());
      else for (auto& v : x) v = uniform01(rng);
      const auto q = full.quantize(m, x);
      if (full.quantize(m, q) != q) {
        c.passed = false;
        c.detail = "level " + std::to_string(m) + ": quantize is not idempotent";
      } else if (space.distance(x, q) > 2.0 * half + 1e-15) {
        c.passed = false;
        c.detail = "level " + std::to_string(m) + ": point farther than the cell diameter from its representative";
      }
    }
  }
  if (c.passed) c.detail = "levels " + std::to_string(full.min_level()) + ".." + std::to_string(top);
  return c;
}

inline Check check_universality(const std::vector<UnitResult>& units) {
  Check c{"universality",
          "average regret <= eps for all N >= analytic threshold; empirical threshold <= analytic; "
          "average regret at the horizon <= max(2^-m, rate + loss gap)",
          true, false, "", 0};
  std::size_t checked = 0, unreached = 0, infeasible = 0;
  for (const auto& u : units) {
    const auto& e = u.universality;
    if (u.horizon_regret > u.horizon_envelope + bound_tolerance && c.passed) {
      c.passed = false;
      c.detail = detail::where(u) + ": average regret " + format_double(u.horizon_regret) + " above envelope " +
                 format_double(u.horizon_envelope);
    }
    if (!e.feasible) {
      ++infeasible;
      continue;
    }
    if (e.analytic_threshold > u.trace.horizon()) {
      ++unreached;
      continue;
    }
    ++checked;
    if (c.passed && (e.violations_after_analytic > 0 || !e.analytic_covers_empirical)) {
      c.passed = false;
      c.detail = detail::where(u) + ": " + std::to_string(e.violations_after_analytic) +
                 " rounds above eps after the analytic threshold " + std::to_string(e.analytic_threshold);
    }
  }
  if (c.passed)
    c.detail = std::to_string(checked) + " runs past the analytic threshold, " + std::to_string(unreached) +
               " with the threshold beyond the horizon, " + std::to_string(infeasible) + " infeasible for the grid";
  return c;
}

inline Check check_randomized_guarantee(const std::vector<UnitResult>& units) {
  Check c{"randomized-guarantee", "fraction of seeds with sup_N sampled average regret <= 2^-m is >= 1 - 2^-m - 3 sigma",
          true, false, "", 0};
  std::string summary;
  for (const auto& u : units) {
    const double p = 1.0 - std::ldexp(1.0, -u.trace.level);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(u.seeds));
    const double need = p - 3.0 * sigma;
    if (c.passed && u.guarantee_fraction < need) {
      c.passed = false;
      c.detail = detail::where(u) + ": fraction " + format_double(u.guarantee_fraction) + " < " + format_double(need);
    }
    summary += (summary.empty() ? "" : ", ") + detail::where(u) + " " + format_double(u.guarantee_fraction);
  }
  if (c.passed) c.detail = "sup over N in [threshold, horizon]: " + summary;
  return c;
}

inline Check check_lil(const std::vector<UnitResult>& units, bool planted) {
  Check c{"lil-envelope",
          std::string("centered sampled sums within sqrt(2.01 L^2 N ln ln N) on [N0, horizon] for >= 95% of seeds") +
              (planted ? " (planted: L understated by 4x)" : ""),
          true, false, "", 0};
  double lowest = 1.0;
  bool any = false;
  for (const auto& u : units) {
    if (!u.lil) continue;
    any = true;
    lowest = std::min(lowest, u.lil->fraction());
    if (c.passed && u.lil->fraction() < 0.95) {
      c.passed = false;
      c.detail = detail::where(u) + ": fraction " + format_double(u.lil->fraction()) + " (worst ratio " +
                 format_double(u.lil->worst_ratio) + ")";
    }
  }
  if (!any) {
    c.skipped = true;
    c.detail = "horizon shorter than N0";
  } else if (c.passed) {
    c.detail = "lowest fraction " + format_double(lowest);
  }
  return c;
}

// Checks that cmd_run enforces on every run (exit 3 on failure).
inline std::vector<Check> run_invariants(const std::vector<UnitResult>& units, bool randomized) {
  return {check_lemma9(units), check_lemma5(units, false), check_convexity(units, randomized, false)};
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json check_json(const Check& c) {
  nlohmann::json j{{"name", c.name}, {"statement", c.statement}, {"passed", c.passed}, {"skipped", c.skipped}, {"detail", c.detail}};
  if (c.round) j["round"] = c.round;
  return j;
}

inline nlohmann::json universality_json(const UniversalityEstimate& e) {
  nlohmann::json j{{"epsilon", e.epsilon},
                   {"delta", e.delta},
                   {"loss_gap", e.loss_gap},
                   {"feasible", e.feasible},
                   {"analytic_threshold", e.analytic_threshold},
                   {"violations_after_analytic", e.violations_after_analytic},
                   {"analytic_covers_empirical", e.analytic_covers_empirical}};
  j["empirical_threshold"] = e.empirical_threshold ? nlohmann::json(*e.empirical_threshold) : nlohmann::json(nullptr);
  if (!e.feasible) j["required_grid_size"] = e.required_grid_size;
  return j;
}

inline nlohmann::json unit_json(const UnitResult& u) {
  const auto& t = u.trace;
  nlohmann::json j{{"scenario", t.scenario},
                   {"rule", t.rule},
                   {"level", t.level},
                   {"horizon", t.horizon()},
                   {"learner_loss", t.learner_total},
                   {"rule_loss", t.rule_total},
                   {"best_expert", t.best_expert},
                   {"best_expert_loss", t.best_expert_total},
                   {"average_regret", u.horizon_regret},
                   {"regret_envelope", u.horizon_envelope},
                   {"nearest_expert", {{"index", t.nearest.index}, {"delta", t.nearest.delta}, {"log_prior", t.nearest_log_prior}}},
                   {"min_lemma9_gap", t.min_lemma9_gap},
                   {"max_lemma5_excess", t.max_lemma5_excess},
                   {"min_convexity_slack", t.min_convexity_slack},
                   {"max_abs_convexity_slack", t.max_abs_convexity_slack},
                   {"universality", universality_json(u.universality)}};
  j["first_within_level"] = t.first_within_level ? nlohmann::json(*t.first_within_level) : nlohmann::json(nullptr);
  if (u.seeds) {
    nlohmann::json r{{"seeds", u.seeds},
                     {"sup_from", u.sup_from},
                     {"sup_to", t.horizon()},
                     {"sup_note", "sup over N is truncated to [sup_from, horizon]"},
                     {"guarantee_fraction", u.guarantee_fraction}};
    if (u.lil) r["lil"] = {{"first_round", u.lil->first_round}, {"fraction", u.lil->fraction()}, {"worst_ratio", u.lil->worst_ratio}};
    j["randomized"] = r;
  }
  return j;
}

inline nlohmann::json experiment_json(const Experiment& e) {
  const auto& c = e.config;
  return {{"mode", c.mode},
          {"horizon", c.horizon},
          {"space", e.structure.space().name()},
          {"m_max", c.m_max},
          {"loss", {{"name", e.loss.name()}, {"bound", e.loss.bound()}, {"lipschitz", std::isfinite(e.loss.lipschitz_constant()) ? nlohmann::json(e.loss.lipschitz_constant()) : nlohmann::json("inf")}}},
          {"grid", e.grid.values()},
          {"pool_size", e.pool_size()},
          {"prior", c.pool.prior},
          {"seeds", c.seeds.size()}};
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline std::filesystem::path out_dir(const Experiment& e, const Options& o) {
  return o.out_dir ? *o.out_dir : std::filesystem::path(e.config.out_dir);
}

inline std::string file_stem(const RegretTrace& t) {
  std::string s = t.scenario + "__" + t.rule;
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  return s;
}

inline Experiment load(const std::filesystem::path& config_path, const Options& o) {
  auto config = load_config(config_path);
  if (o.seed_override) {
    apply_seed_override(config, *o.seed_override);
    require_valid(config);
  }
  return build_experiment(std::move(config));
}

inline void print_check(std::ostream& out, const Check& c) {
  out << (c.skipped ? "SKIP " : c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.statement << " -- " << c.detail << '\n';
}

// Maps library errors to exit codes.
template <class F>
int guarded(const Options& o, F body) {
  try {
    return body();
  } catch (const config_error& e) {
    *o.err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const resource_limit_error& e) {
    *o.err << "resource limit: " << e.what() << '\n';
    return exit_resource;
  } catch (const invariant_violation& e) {
    *o.err << "invariant violation [" << e.check() << "] at round " << e.round() << ": " << e.what() << '\n';
    return exit_invariant;
  } catch (const std::bad_alloc&) {
    *o.err << "resource limit: out of memory\n";
    return exit_resource;
  } catch (const std::exception& e) {
    *o.err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace detail

// Executes every (scenario, rule) game and writes one trace CSV per game,
// summary.json, pool.json and (optionally) SVG charts.
inline int cmd_run(const std::filesystem::path& config_path, const Options& o) {
  return detail::guarded(o, [&] {
    const auto e = detail::load(config_path, o);
    const auto units = run_units(e, o.jobs);
    const auto dir = detail::out_dir(e, o);
    const auto p = e.provenance();
    std::filesystem::create_directories(dir);

    nlohmann::json summary = provenance_json(p);
    summary["experiment"] = experiment_json(e);
    summary["runs"] = nlohmann::json::array();
    for (const auto& u : units) {
      std::ostringstream csv;
      write_trace_csv(csv, u.trace, e.structure.space(), p);
      write_text_file(dir / ("trace_" + detail::file_stem(u.trace) + ".csv"), csv.str());
      if (!u.path_sup_regret.empty()) {
        std::ostringstream paths;
        paths << provenance_line(p) << " scenario=" << u.trace.scenario << " rule=" << u.trace.rule << '\n';
        paths << "seed,sup_average_regret,final_regret\n";
        for (std::size_t i = 0; i < u.path_sup_regret.size(); ++i)
          paths << e.config.seeds[i] << ',' << format_double(u.path_sup_regret[i]) << ','
                << format_double(u.path_final_regret[i]) << '\n';
        write_text_file(dir / ("paths_" + detail::file_stem(u.trace) + ".csv"), paths.str());
      }
      if (o.svg) write_text_file(dir / ("regret_" + detail::file_stem(u.trace) + ".svg"), regret_svg(u.trace, p));
      summary["runs"].push_back(unit_json(u));
    }

    const auto checks = run_invariants(units, e.config.randomized());
    bool ok = true;
    summary["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
      summary["checks"].push_back(check_json(c));
      ok = ok && c.passed;
    }
    summary["verdict"] = ok ? "pass" : "fail";
    write_json_file(dir / "summary.json", summary);

    nlohmann::json pool = provenance_json(p);
    pool["pool"] = e.deterministic_pool ? e.deterministic_pool->to_json() : e.randomized_pool->to_json();
    write_json_file(dir / "pool.json", pool);

    *o.out << units.size() << " runs, pool of " << e.pool_size() << " experts, horizon " << e.config.horizon
           << ", outputs in " << dir.string() << '\n';
    for (const auto& c : checks)
      if (!c.passed) throw invariant_violation(c.name, c.round, c.detail);
    return exit_ok;
  });
}

// Runs the full property battery and writes verify.json. Exit 3 iff a check
// fails.
inline int cmd_verify(const std::filesystem::path& config_path, const Options& o) {
  return detail::guarded(o, [&] {
    const auto e = detail::load(config_path, o);
    const auto& c = e.config;
    const auto units = run_units(e, o.jobs);
    const auto& plant = c.verify.plant;

    std::vector<Check> checks{check_lemma9(units),
                              check_lemma5(units, plant == "lemma5"),
                              check_convexity(units, c.randomized(), plant == "convexity"),
                              check_mean_comparison(c.verify.mean_comparison_samples, e.loss.bound(), c.verify.seed),
                              check_fm_metric(e.loss, e.grid, c.verify.fm_samples, c.verify.seed + 1),
                              check_quantizer(e.structure, c.verify.seed + 2),
                              check_universality(units)};
    if (c.randomized()) {
      checks.push_back(check_randomized_guarantee(units));
      checks.push_back(check_lil(units, plant == "lil"));
    }

    const auto p = e.provenance();
    nlohmann::json report = provenance_json(p);
    report["experiment"] = experiment_json(e);
    report["plant"] = plant;
    report["checks"] = nlohmann::json::array();
    const Check* failed = nullptr;
    for (const auto& check : checks) {
      detail::print_check(*o.out, check);
      report["checks"].push_back(check_json(check));
      if (!check.passed && !failed) failed = &check;
    }
    report["runs"] = nlohmann::json::array();
    for (const auto& u : units) report["runs"].push_back(unit_json(u));
    report["verdict"] = failed ? "fail" : "pass";
    write_json_file(detail::out_dir(e, o) / "verify.json", report);
    if (failed) throw invariant_violation(failed->name, failed->round, failed->detail);
    return exit_ok;
  });
}

struct SweepRow {
  int m = 0;
  std::size_t grid_size = 0;
  std::size_t horizon = 0;
  double epsilon = 0.0;
  std::size_t pool_size = 0;
  UnitResult unit;
};

// Configurations for every point of the sweep grid. Axes left empty keep the
// config's value. When m is swept, function rules follow the swept level and
// fixed-level rules only appear at their own level.
inline std::vector<ExperimentConfig> sweep_points(const ExperimentConfig& base) {
  const auto& s = base.sweep;
  std::vector<int> ms = s.m.empty() ? std::vector<int>{base.m_max} : s.m;
  std::vector<std::size_t> grids = s.grid_size.empty() ? std::vector<std::size_t>{base.pool.grid_size} : s.grid_size;
  std::vector<std::size_t> horizons = s.horizon.empty() ? std::vector<std::size_t>{base.horizon} : s.horizon;
  std::vector<std::optional<double>> eps;
  if (s.epsilon.empty()) eps.push_back(base.verify.epsilon);
  for (double v : s.epsilon) eps.push_back(v);

  std::vector<ExperimentConfig> out;
  for (int m : ms)
    for (auto g : grids)
      for (auto h : horizons)
        for (const auto& ep : eps) {
          ExperimentConfig c = base;
          c.sweep = {};
          c.horizon = h;
          c.verify.epsilon = ep;
          if (!s.grid_size.empty()) {
            c.pool.grid_size = g;
            c.pool.grid.clear();
          }
          if (!s.m.empty()) {
            c.m_max = m;
            std::vector<RuleConfig> rules;
            for (auto r : base.rules) {
              if (r.function) r.level.reset();
              else if (r.expert == 0 && r.level != m) continue;
              rules.push_back(std::move(r));
            }
            c.rules = std::move(rules);
          }
          out.push_back(std::move(c));
        }
  return out;
}

// Empirical vs analytic universality thresholds across the sweep grid,
// written to sweep.csv.
inline int cmd_sweep(const std::filesystem::path& config_path, const Options& o) {
  return detail::guarded(o, [&] {
    auto base = load_config(config_path);
    if (o.seed_override) apply_seed_override(base, *o.seed_override);
    require_valid(base);
    const auto hash = config_hash(base);
    const Provenance p{hash, base.name};

    std::vector<SweepRow> rows;
    for (auto& point : sweep_points(base)) {
      if (point.rules.empty()) continue;
      const auto e = build_experiment(point);
      for (auto& u : run_units(e, o.jobs)) {
        const int m = u.trace.level;
        rows.push_back({m, e.grid.size(), point.horizon, u.epsilon, e.pool_size(), std::move(u)});
      }
    }

    std::ostringstream csv;
    csv << provenance_line(p) << '\n';
    csv << "m,grid_size,horizon,epsilon,scenario,rule,pool_size,feasible,required_grid_size,delta,analytic_threshold,"
           "empirical_threshold,average_regret,analytic_covers_empirical\n";
    for (const auto& r : rows) {
      const auto& e = r.unit.universality;
      csv << r.m << ',' << r.grid_size << ',' << r.horizon << ',' << format_double(r.epsilon) << ',' << r.unit.trace.scenario
          << ',' << r.unit.trace.rule << ',' << r.pool_size << ',' << (e.feasible ? "yes" : "infeasible") << ','
          << (e.feasible ? std::string() : std::to_string(e.required_grid_size)) << ',' << format_double(e.delta) << ','
          << (e.feasible ? std::to_string(e.analytic_threshold) : std::string()) << ','
          << (e.empirical_threshold ? std::to_string(*e.empirical_threshold) : std::string()) << ','
          << format_double(r.unit.horizon_regret) << ',' << (e.analytic_covers_empirical ? "yes" : "no") << '\n';
    }
    const auto dir = o.out_dir ? *o.out_dir : std::filesystem::path(base.out_dir);
    write_text_file(dir / "sweep.csv", csv.str());
    *o.out << csv.str();
    return exit_ok;
  });
}

}  // namespace waa::app
