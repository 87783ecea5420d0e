#pragma once

// Drives complete prediction-protocol games: Reality generators, benchmark
// rules, regret traces, the randomized sampling paths and the universality
// and law-of-the-iterated-logarithm checks built on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "waa/engine.hpp"
#include "waa/error.hpp"
#include "waa/experts.hpp"
#include "waa/losses.hpp"
#include "waa/measures.hpp"
#include "waa/numeric.hpp"
#include "waa/spaces.hpp"

namespace waa {

// ---------------------------------------------------------------------------
// Reality

// Map from signals to raw observations used by the scenario generators.
// Values are projected into Y by the caller.
struct ObservationRule {
  enum class Kind { constant, step, sine, parity, table };
  Kind kind = Kind::constant;
  double value = 0.5;       // constant
  double threshold = 0.5;   // step: high when the signal's mean coordinate >= threshold
  double low = 0.0;
  double high = 1.0;
  double frequency = 1.0;   // sine: 1/2 + 1/2 sin(2 pi f x)
  int level = 1;            // table: values per cell of phi_level
  std::vector<double> table;

  double operator()(const ApproximationStructure& structure, const Signal& x) const {
    double mean = 0.0;
    for (double c : x) mean += c;
    mean /= static_cast<double>(x.size());
    switch (kind) {
      case Kind::constant: return value;
      case Kind::step: return mean >= threshold ? high : low;
      case Kind::sine: return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * frequency * mean);
      case Kind::parity: return static_cast<long long>(std::llround(x[0])) % 2 == 0 ? low : high;
      case Kind::table: return table.at(structure.cell_index(level, x));
    }
    return value;
  }

  friend bool operator==(const ObservationRule&, const ObservationRule&) = default;
};

enum class ScenarioKind { iid_noise, piecewise, adversarial_switch, adaptive, replay };
enum class SamplerKind { uniform, sweep };

struct RealityScenario {
  std::string name = "scenario";
  ScenarioKind kind = ScenarioKind::piecewise;
  std::vector<ObservationRule> rules;      // one for iid_noise/piecewise, several for adversarial_switch
  double noise = 0.0;                      // iid_noise: uniform perturbation half-width
  std::size_t switch_period = 0;           // adversarial_switch: rule (n-1)/period mod count ...
  std::vector<std::size_t> switch_at;      // ... or advance to the next rule at these rounds
  std::string replay_path;                 // replay: CSV of (x, y) rows
  SamplerKind sampler = SamplerKind::uniform;
  std::uint64_t seed = 1;

  friend bool operator==(const RealityScenario&, const RealityScenario&) = default;
};

struct PastRound {
  Signal x;
  double gamma_point;   // the prediction, or the mean of a measure prediction
  double y;
};

// Reality moves first with x_n, sees the prediction, then reveals y_n.
class Reality {
 public:
  virtual ~Reality() = default;
  virtual Signal signal(std::size_t n) = 0;
  virtual double outcome(std::size_t n, const Signal& x, double gamma_point, std::span<const PastRound> history) = 0;
  // Rounds available; 0 for unbounded generators.
  virtual std::size_t length() const { return 0; }
};

namespace detail {

class SignalSampler {
 public:
  SignalSampler(const SignalSpace& space, SamplerKind kind, std::uint64_t seed) : space_(space), kind_(kind), rng_(seed) {}

  Signal next(std::size_t n) {
    const auto d = space_.dimension();
    Signal x(d);
    if (space_.kind() == SpaceKind::finite_set) {
      const auto size = space_.labels().size();
      x[0] = kind_ == SamplerKind::sweep ? static_cast<double>((n - 1) % size)
                                         : static_cast<double>(rng_() % size);
      return x;
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (kind_ == SamplerKind::uniform) {
        x[i] = uniform01(rng_);
      } else {
        // Weyl sequence with a distinct irrational step per coordinate.
        const double step = std::sqrt(static_cast<double>(2 + 3 * i)) - std::floor(std::sqrt(static_cast<double>(2 + 3 * i)));
        const double v = static_cast<double>(n) * (step == 0.0 ? std::numbers::phi - 1.0 : step);
        x[i] = v - std::floor(v);
      }
    }
    return x;
  }

 private:
  SignalSpace space_;
  SamplerKind kind_;
  Rng rng_;
};

class GeneratedReality final : public Reality {
 public:
  GeneratedReality(RealityScenario scenario, ApproximationStructure structure, ObservationSpace obs)
      : scenario_(std::move(scenario)),
        structure_(std::move(structure)),
        obs_(std::move(obs)),
        sampler_(structure_.space(), scenario_.sampler, scenario_.seed),
        noise_rng_(scenario_.seed ^ 0x9e3779b97f4a7c15ULL) {
    if (scenario_.kind != ScenarioKind::adaptive && scenario_.rules.empty())
      throw invalid_argument_error("scenario '" + scenario_.name + "' has no observation rule");
    for (const auto& r : scenario_.rules)
      if (r.kind == ObservationRule::Kind::table) {
        structure_.check_level(r.level);
        if (r.table.size() != structure_.image_size(r.level))
          throw invalid_argument_error("observation table must have 2^m entries");
      }
  }

  Signal signal(std::size_t n) override { return sampler_.next(n); }

  double outcome(std::size_t n, const Signal& x, double gamma_point, std::span<const PastRound>) override {
    switch (scenario_.kind) {
      case ScenarioKind::iid_noise: {
        const double raw = scenario_.rules.front()(structure_, x);
        return obs_.project(raw + scenario_.noise * (2.0 * uniform01(noise_rng_) - 1.0));
      }
      case ScenarioKind::piecewise: return obs_.project(scenario_.rules.front()(structure_, x));
      case ScenarioKind::adversarial_switch: return obs_.project(scenario_.rules[active_rule(n)](structure_, x));
      case ScenarioKind::adaptive: {
        // Contrarian: the point of Y farthest from the prediction.
        if (!obs_.is_finite()) return gamma_point < 0.5 ? 1.0 : 0.0;
        double best = obs_.values.front();
        for (double v : obs_.values)
          if (std::abs(v - gamma_point) > std::abs(best - gamma_point)) best = v;
        return best;
      }
      case ScenarioKind::replay: break;
    }
    throw invalid_argument_error("replay scenarios are built by make_reality");
  }

  std::size_t active_rule(std::size_t n) const {
    const auto count = scenario_.rules.size();
    if (!scenario_.switch_at.empty()) {
      std::size_t switches = 0;
      for (auto r : scenario_.switch_at)
        if (n >= r) ++switches;
      return switches % count;
    }
    if (scenario_.switch_period == 0) return 0;
    return ((n - 1) / scenario_.switch_period) % count;
  }

 private:
  RealityScenario scenario_;
  ApproximationStructure structure_;
  ObservationSpace obs_;
  SignalSampler sampler_;
  Rng noise_rng_;
};

}  // namespace detail

// Reality whose observation is chosen by a callback that sees the full
// history and the current prediction.
class AdaptiveReality final : public Reality {
 public:
  using Outcome = std::function<double(std::span<const PastRound>, const Signal&, double)>;

  AdaptiveReality(const SignalSpace& space, SamplerKind sampler, std::uint64_t seed, Outcome outcome)
      : sampler_(space, sampler, seed), outcome_(std::move(outcome)) {}

  Signal signal(std::size_t n) override { return sampler_.next(n); }
  double outcome(std::size_t, const Signal& x, double gamma_point, std::span<const PastRound> history) override {
    return outcome_(history, x, gamma_point);
  }

 private:
  detail::SignalSampler sampler_;
  Outcome outcome_;
};

// Fixed (x, y) sequence.
class ReplayReality final : public Reality {
 public:
  ReplayReality(std::vector<Signal> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size()) throw invalid_argument_error("replay: signal and observation counts differ");
  }

  Signal signal(std::size_t n) override { return xs_.at(n - 1); }
  double outcome(std::size_t n, const Signal&, double, std::span<const PastRound>) override { return ys_.at(n - 1); }
  std::size_t length() const override { return xs_.size(); }

 private:
  std::vector<Signal> xs_;
  std::vector<double> ys_;
};

// Replay CSV: one row per round, the signal's coordinates (or its label on a
// finite set) followed by y. A first row whose last field is not a number is
// taken as a header.
inline std::unique_ptr<ReplayReality> read_replay(const std::string& path, const SignalSpace& space,
                                                  const ObservationSpace& obs) {
  std::ifstream in(path);
  if (!in) throw invalid_argument_error("cannot open replay file '" + path + "'");
  std::vector<Signal> xs;
  std::vector<double> ys;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    auto parse = [&](const std::string& s, double& out) {
      try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size();
      } catch (const std::exception&) {
        return false;
      }
    };
    double y = 0.0;
    if (!parse(fields.back(), y)) {
      if (line_no == 1) continue;
      throw invalid_argument_error("replay line " + std::to_string(line_no) + ": observation is not a number");
    }
    const std::string where = "replay line " + std::to_string(line_no);
    if (fields.size() != space.dimension() + 1) throw invalid_argument_error(where + ": wrong field count");
    Signal x;
    if (space.kind() == SpaceKind::finite_set) {
      x = space.label_signal(fields[0]);
    } else {
      for (std::size_t i = 0; i < space.dimension(); ++i) {
        double v = 0.0;
        if (!parse(fields[i], v)) throw invalid_argument_error(where + ": signal is not a number");
        x.push_back(v);
      }
    }
    if (!space.contains(x)) throw domain_error(where + ": signal outside " + space.name());
    if (!obs.contains(y)) throw domain_error(where + ": observation outside Y");
    xs.push_back(std::move(x));
    ys.push_back(y);
  }
  return std::make_unique<ReplayReality>(std::move(xs), std::move(ys));
}

inline std::unique_ptr<Reality> make_reality(const RealityScenario& scenario, const ApproximationStructure& structure,
                                             const ObservationSpace& obs) {
  if (scenario.kind == ScenarioKind::replay) return read_replay(scenario.replay_path, structure.space(), obs);
  return std::make_unique<detail::GeneratedReality>(scenario, structure, obs);
}

// ---------------------------------------------------------------------------
// Benchmark rules and traces

// D o phi_m: a table over the image of phi_m with values in Gamma (points) or
// P(Gamma) (measures). Values need not lie on the expert grid.
template <class Value>
struct BenchmarkRule {
  std::string name = "rule";
  int level = 1;
  std::vector<Value> table;

  const Value& operator()(const ApproximationStructure& structure, const Signal& x) const {
    return table.at(structure.cell_index(level, x));
  }
};

struct TraceRow {
  std::size_t n = 0;
  Signal x;
  double y = 0.0;
  std::string gamma_repr;
  double learner_loss = 0.0;
  double rule_loss = 0.0;
  double best_expert_loss = 0.0;
  double lemma5_bound = 0.0;
  double lemma9_gap = 0.0;
};

struct RegretTrace {
  std::string scenario;
  std::string rule;
  int level = 1;
  bool randomized = false;
  double loss_bound = 0.0;
  std::vector<TraceRow> rows;

  // Aggregates; each equals the in-order sum of the matching per-round field.
  double learner_total = 0.0;
  double rule_total = 0.0;
  double best_expert_total = 0.0;
  std::size_t best_expert = 0;                     // K*, 1-based, lowest cumulative loss at the horizon
  std::optional<std::size_t> first_within_level;   // first N with average regret <= 2^-m

  // Nearest pool expert to the rule and the loss gap its distance allows.
  NearestExpert nearest{0, 0.0};
  double nearest_log_prior = 0.0;
  double loss_gap_factor = 1.0;   // |lambda(D) - lambda(D_K)| <= factor * delta

  // Auditor summary.
  double min_lemma9_gap = 0.0;
  double max_lemma5_excess = 0.0;
  std::size_t lemma5_excess_round = 0;
  double min_convexity_slack = 0.0;
  double max_abs_convexity_slack = 0.0;

  std::size_t horizon() const noexcept { return rows.size(); }

  // (L_N - L_N(D)) / N.
  double average_regret(std::size_t n) const { return cumulative_regret().at(n - 1) / static_cast<double>(n); }

  std::vector<double> cumulative_regret() const {
    std::vector<double> out;
    out.reserve(rows.size());
    double learner = 0.0, rule = 0.0;
    for (const auto& r : rows) {
      learner += r.learner_loss;
      rule += r.rule_loss;
      out.push_back(learner - rule);
    }
    return out;
  }
};

struct SampledPath {
  std::uint64_t seed = 0;
  std::vector<double> learner_loss;   // lambda(g_n, y_n), g_n ~ gamma_n
  std::vector<double> rule_loss;      // lambda(d_n, y_n), d_n ~ D(phi_m(x_n))
};

template <class Value>
struct GameRun {
  RegretTrace trace;
  std::vector<RoundRecord<Value>> history;
  RunAudit audit;
};

struct RandomizedRun {
  GameRun<FiniteMeasure> mean;   // the in-expectation game on P(Gamma)
  std::vector<SampledPath> paths;
};

namespace detail {

template <class Value>
GameRun<Value> play(Reality& reality, std::shared_ptr<const ExpertPool<Value>> pool, const LossFunction& loss,
                    const ApproximationStructure& structure, const BenchmarkRule<Value>& rule, std::size_t horizon,
                    const std::string& scenario_name) {
  if (!(pool->structure() == structure))
    throw config_error("structure", "scenario structure does not match the pool's structure");
  if (std::find(pool->levels().begin(), pool->levels().end(), rule.level) == pool->levels().end())
    throw config_error("rule", "rule level " + std::to_string(rule.level) + " is not a pool level");
  if (rule.table.size() != structure.image_size(rule.level))
    throw config_error("rule", "rule '" + rule.name + "' must have 2^m table entries");
  if (reality.length() != 0 && reality.length() < horizon)
    throw config_error("horizon", "replay has only " + std::to_string(reality.length()) + " rounds");

  WeakAggregatingAlgorithm<Value> engine(pool, loss);
  GameRun<Value> run;
  run.history.reserve(horizon);
  std::vector<PastRound> past;
  past.reserve(horizon);
  std::vector<double> rule_losses;
  rule_losses.reserve(horizon);

  for (std::size_t n = 1; n <= horizon; ++n) {
    Signal x = reality.signal(n);
    auto forecast = engine.predict(x);
    const double point = ValueTraits<Value>::point(forecast.value);
    const double y = reality.outcome(n, x, point, past);
    rule_losses.push_back(ValueTraits<Value>::loss(loss, rule(structure, x), y));
    run.history.push_back(engine.update(x, forecast, y));
    past.push_back({std::move(x), point, y});
  }

  run.audit = audit_history<Value>(run.history, *pool, loss);
  const auto& audit = run.audit;

  auto& trace = run.trace;
  trace.scenario = scenario_name;
  trace.rule = rule.name;
  trace.level = rule.level;
  trace.randomized = !std::is_same_v<Value, double>;
  trace.loss_bound = loss.bound();
  trace.nearest = nearest_expert<Value>(*pool, rule.level, rule.table, loss);
  trace.nearest_log_prior = pool->log_prior(trace.nearest.index - 1);
  trace.loss_gap_factor = trace.randomized ? 1.0 + loss.bound() : 1.0;

  const auto& totals = audit.expert_cumulative;
  const auto best = static_cast<std::size_t>(std::min_element(totals.begin(), totals.end()) - totals.begin());
  trace.best_expert = best + 1;
  const double best_lq = pool->log_prior(best);
  const double slack_level = std::ldexp(1.0, -rule.level);

  double learner = 0.0, rule_total = 0.0;
  trace.rows.reserve(horizon);
  for (std::size_t i = 0; i < run.history.size(); ++i) {
    const auto& rec = run.history[i];
    TraceRow row;
    row.n = rec.n;
    row.x = rec.x;
    row.y = rec.y;
    row.gamma_repr = ValueTraits<Value>::repr(rec.prediction);
    row.learner_loss = rec.learner_loss;
    row.rule_loss = rule_losses[i];
    row.best_expert_loss = rec.palette_losses[pool->entry(best, rec.cells[pool->level_slot(best)])];
    row.lemma5_bound = lemma5_bound_from_log_prior(loss.bound(), best_lq, static_cast<double>(rec.n));
    row.lemma9_gap = audit.lemma9_gap[i];
    learner += row.learner_loss;
    rule_total += row.rule_loss;
    trace.learner_total += row.learner_loss;
    trace.rule_total += row.rule_loss;
    trace.best_expert_total += row.best_expert_loss;
    if (!trace.first_within_level && (learner - rule_total) / static_cast<double>(rec.n) <= slack_level)
      trace.first_within_level = rec.n;
    trace.rows.push_back(std::move(row));
  }

  trace.min_lemma9_gap = audit.min_lemma9_gap();
  trace.max_lemma5_excess = audit.max_lemma5_excess();
  trace.lemma5_excess_round =
      audit.lemma5_excess.empty()
          ? 0
          : static_cast<std::size_t>(std::max_element(audit.lemma5_excess.begin(), audit.lemma5_excess.end()) -
                                     audit.lemma5_excess.begin()) + 1;
  trace.min_convexity_slack = audit.min_convexity_slack();
  trace.max_abs_convexity_slack = audit.max_abs_convexity_slack();
  return run;
}

}  // namespace detail

// Full protocol with the deterministic WAA on a convex loss.
inline GameRun<double> run_deterministic(Reality& reality, std::shared_ptr<const DeterministicPool> pool,
                                         const LossFunction& loss, const ApproximationStructure& structure,
                                         const BenchmarkRule<double>& rule, std::size_t horizon,
                                         const std::string& scenario_name = "scenario") {
  if (!loss.is_convex()) throw contract_error("run_deterministic needs a convex loss");
  return detail::play<double>(reality, std::move(pool), loss, structure, rule, horizon, scenario_name);
}

// Plays the game on P(Gamma) once, then for every seed draws independent
// g_n ~ gamma_n and d_n ~ D(phi_m(x_n)). Reality never sees the draws, so the
// measure-valued game is shared by all seeds.
inline RandomizedRun run_randomized(Reality& reality, std::shared_ptr<const RandomizedPool> pool,
                                    const LossFunction& loss, const ApproximationStructure& structure,
                                    const BenchmarkRule<FiniteMeasure>& rule, std::span<const std::uint64_t> seeds,
                                    std::size_t horizon, const std::string& scenario_name = "scenario") {
  if (seeds.empty()) throw invalid_argument_error("run_randomized needs at least one seed");
  RandomizedRun out;
  out.mean = detail::play<FiniteMeasure>(reality, std::move(pool), loss, structure, rule, horizon, scenario_name);
  const auto& history = out.mean.history;
  for (auto seed : seeds) {
    SampledPath path;
    path.seed = seed;
    path.learner_loss.reserve(history.size());
    path.rule_loss.reserve(history.size());
    Rng rng(seed);
    for (const auto& rec : history) {
      const double g = sample(rec.prediction, rng);
      const double d = sample(rule(structure, rec.x), rng);
      path.learner_loss.push_back(loss.evaluate(g, rec.y));
      path.rule_loss.push_back(loss.evaluate(d, rec.y));
    }
    out.paths.push_back(std::move(path));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checks on finished runs

// sqrt(2.01 L^2 N ln ln N).
inline double lil_envelope(double loss_bound, double rounds) {
  if (rounds < 3.0) throw invalid_argument_error("lil_envelope needs N >= 3");
  return std::sqrt(2.01 * loss_bound * loss_bound * rounds * std::log(std::log(rounds)));
}

struct LilCheck {
  std::size_t first_round = 0;
  std::vector<bool> within;      // per path: both centered sums inside the envelope on [N0, horizon]
  double worst_ratio = 0.0;      // max |centered sum| / envelope over all paths and rounds
  double fraction() const {
    if (within.empty()) return 1.0;
    return static_cast<double>(std::count(within.begin(), within.end(), true)) / static_cast<double>(within.size());
  }
};

// For every path, whether sup_{N0 <= N <= horizon} of both
//   |sum_n (lambda(g_n, y_n) - lambda(gamma_n, y_n))| and
//   |sum_n (lambda(d_n, y_n) - lambda(D(phi_m(x_n)), y_n))|
// stays within lil_envelope(L, N).
inline LilCheck check_lil_envelope(std::span<const SampledPath> paths, const RegretTrace& expected, double loss_bound,
                                   std::size_t first_round) {
  LilCheck out;
  out.first_round = std::max<std::size_t>(first_round, 3);
  for (const auto& path : paths) {
    if (path.learner_loss.size() != expected.rows.size() || path.rule_loss.size() != expected.rows.size())
      throw invalid_argument_error("path and expected trace differ in length");
    double learner_dev = 0.0, rule_dev = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < path.learner_loss.size(); ++i) {
      learner_dev += path.learner_loss[i] - expected.rows[i].learner_loss;
      rule_dev += path.rule_loss[i] - expected.rows[i].rule_loss;
      const std::size_t n = i + 1;
      if (n < out.first_round) continue;
      const double env = lil_envelope(loss_bound, static_cast<double>(n));
      const double dev = std::max(std::abs(learner_dev), std::abs(rule_dev));
      if (env > 0.0) out.worst_ratio = std::max(out.worst_ratio, dev / env);
      if (dev > env) ok = false;
    }
    out.within.push_back(ok);
  }
  return out;
}

// sup over first_round <= N <= horizon of the sampled average regret.
inline double sup_average_regret(const SampledPath& path, std::size_t first_round) {
  double cumulative = 0.0;
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.learner_loss.size(); ++i) {
    cumulative += path.learner_loss[i] - path.rule_loss[i];
    const std::size_t n = i + 1;
    if (n >= first_round) sup = std::max(sup, cumulative / static_cast<double>(n));
  }
  return sup;
}

// Fraction of paths whose sampled average regret stays <= epsilon for all
// first_round <= N <= horizon.
inline double randomized_guarantee_fraction(std::span<const SampledPath> paths, std::size_t first_round,
                                            double epsilon) {
  if (paths.empty()) return 1.0;
  std::size_t good = 0;
  for (const auto& p : paths)
    if (sup_average_regret(p, first_round) <= epsilon) ++good;
  return static_cast<double>(good) / static_cast<double>(paths.size());
}

struct UniversalityEstimate {
  std::string scenario;
  std::string rule;
  int level = 1;
  double epsilon = 0.0;
  double delta = 0.0;
  double loss_gap = 0.0;                    // factor * delta
  double log_prior = 0.0;                   // ln q_K of the nearest expert
  bool feasible = true;
  std::size_t required_grid_size = 0;       // when infeasible: uniform grid size that makes it feasible (0: unknown)
  std::size_t analytic_threshold = 0;
  std::optional<std::size_t> empirical_threshold;
  std::size_t violations_after_analytic = 0;  // rounds N >= analytic threshold with average regret > epsilon
  bool analytic_covers_empirical = false;
};

// Threshold from the proof chain: N with (L^2 e^L + ln 1/q_K) / sqrt(N) <= eps/2,
// given a nearest expert whose loss gap is < eps/2.
inline std::size_t analytic_threshold(double loss_bound, double log_prior, double epsilon) {
  if (!(epsilon > 0.0)) throw invalid_argument_error("epsilon must be positive");
  if (epsilon > 2.0 * loss_bound) return 1;
  const double c = loss_bound * loss_bound * std::exp(loss_bound) - log_prior;
  const double n = std::ceil(std::pow(2.0 * c / epsilon, 2.0));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

// Analytic vs empirical N_{D,m,eps} for each trace. The empirical threshold
// is the first N after which the running average regret stays <= eps up to
// the horizon.
inline std::vector<UniversalityEstimate> empirical_universality(std::span<const RegretTrace> traces, int level,
                                                                double epsilon, double lipschitz = 0.0) {
  std::vector<UniversalityEstimate> out;
  for (const auto& t : traces) {
    if (t.level != level) continue;
    UniversalityEstimate e;
    e.scenario = t.scenario;
    e.rule = t.rule;
    e.level = t.level;
    e.epsilon = epsilon;
    e.delta = t.nearest.delta;
    e.loss_gap = t.loss_gap_factor * t.nearest.delta;
    e.log_prior = t.nearest_log_prior;
    const bool trivial = epsilon > 2.0 * t.loss_bound;
    e.feasible = trivial || e.loss_gap < epsilon / 2.0;
    const auto regret = t.cumulative_regret();
    for (std::size_t i = regret.size(); i-- > 0;) {
      if (regret[i] / static_cast<double>(i + 1) > epsilon) break;
      e.empirical_threshold = i + 1;
    }
    const auto& empirical = e.empirical_threshold;
    if (!e.feasible) {
      if (std::isfinite(lipschitz) && lipschitz > 0.0)
        e.required_grid_size = static_cast<std::size_t>(std::floor(t.loss_gap_factor * lipschitz / epsilon)) + 2;
      out.push_back(std::move(e));
      continue;
    }
    e.analytic_threshold = analytic_threshold(t.loss_bound, t.nearest_log_prior, epsilon);
    for (std::size_t n = e.analytic_threshold; n <= regret.size(); ++n)
      if (regret[n - 1] / static_cast<double>(n) > epsilon) ++e.violations_after_analytic;
    e.analytic_covers_empirical = empirical.has_value() ? *empirical <= e.analytic_threshold
                                                        : e.analytic_threshold > regret.size();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace waa
