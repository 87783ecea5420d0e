#pragma once

// Experiment configuration: TOML schema, validation with per-field
// diagnostics, canonical serialization and the config hash.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <toml.hpp>

#include "waa/error.hpp"
#include "waa/experts.hpp"
#include "waa/harness.hpp"
#include "waa/losses.hpp"
#include "waa/measures.hpp"
#include "waa/spaces.hpp"

namespace waa {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seeds are read as size_t");

struct SpaceConfig {
  std::string kind = "unit_interval";   // unit_interval | unit_cube | finite_set
  std::size_t dimension = 1;
  std::vector<std::string> labels;
  friend bool operator==(const SpaceConfig&, const SpaceConfig&) = default;
};

struct LossConfig {
  std::string kind = "square";          // square | absolute | zero_one | table
  std::vector<double> observations;     // empty: Y = [0, 1]
  double threshold = 0.5;               // zero_one
  std::vector<double> predictions;      // table
  std::vector<std::vector<double>> table;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct PoolConfig {
  std::size_t grid_size = 3;
  std::vector<double> grid;             // explicit grid; overrides grid_size
  std::size_t denominator = 2;          // randomized: masses j / denominator
  std::size_t cap = DeterministicPool::default_cap;
  std::string prior = "hierarchical";   // hierarchical | uniform
  std::map<std::size_t, double> prior_overrides;
  friend bool operator==(const PoolConfig&, const PoolConfig&) = default;
};

// Exactly one of values / measures / expert / function is set.
struct RuleConfig {
  std::string name = "rule";
  std::optional<int> level;             // required unless `function` is used (then defaults to m_max)
  std::vector<double> values;
  std::vector<std::vector<Atom>> measures;
  std::size_t expert = 0;               // copy the table of this 1-based pool expert
  std::optional<ObservationRule> function;  // evaluated at the cell representatives
  friend bool operator==(const RuleConfig&, const RuleConfig&) = default;
};

struct VerifyConfig {
  std::optional<double> epsilon;        // default 2^-m per rule
  std::size_t lil_first_round = 50;
  std::string plant = "none";           // none | lemma5 | convexity | lil
  std::size_t mean_comparison_samples = 10000;
  std::size_t fm_samples = 1000;
  std::uint64_t seed = 12345;
  friend bool operator==(const VerifyConfig&, const VerifyConfig&) = default;
};

struct SweepConfig {
  std::vector<int> m;
  std::vector<std::size_t> grid_size;
  std::vector<std::size_t> horizon;
  std::vector<double> epsilon;
  bool empty() const noexcept { return m.empty() && grid_size.empty() && horizon.empty() && epsilon.empty(); }
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string mode = "deterministic";   // deterministic | randomized
  std::size_t horizon = 1000;
  std::vector<std::uint64_t> seeds{1};  // randomized: one sampled path per seed
  std::string out_dir = "out";
  int m_max = 2;
  SpaceConfig space;
  LossConfig loss;
  PoolConfig pool;
  std::vector<RealityScenario> scenarios;
  std::vector<RuleConfig> rules;
  VerifyConfig verify;
  SweepConfig sweep;

  bool randomized() const noexcept { return mode == "randomized"; }
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline constexpr std::size_t max_horizon = 10'000'000;
inline constexpr std::size_t max_seeds = 100'000;

struct Diagnostic {
  std::string field;
  std::string message;
};

// Thrown with every diagnostic collected; field() names the first one.
class config_errors : public config_error {
 public:
  explicit config_errors(std::vector<Diagnostic> all)
      : config_error(all.empty() ? "" : all.front().field, join(all), verbatim_t{}), all_(std::move(all)) {}
  const std::vector<Diagnostic>& diagnostics() const noexcept { return all_; }

 private:
  static std::string join(const std::vector<Diagnostic>& all) {
    std::string out;
    for (const auto& d : all) {
      if (!out.empty()) out += '\n';
      out += d.field + ": " + d.message;
    }
    return out;
  }
  std::vector<Diagnostic> all_;
};

// ---------------------------------------------------------------------------
// Building library objects from a config

inline SignalSpace make_space(const SpaceConfig& c) {
  if (c.kind == "unit_interval") return SignalSpace::unit_interval();
  if (c.kind == "unit_cube") return SignalSpace::unit_cube(c.dimension);
  if (c.kind == "finite_set") return SignalSpace::finite_set(c.labels);
  throw config_error("space.kind", "unknown space '" + c.kind + "'");
}

inline ObservationSpace make_observations(const LossConfig& c) {
  if (c.kind == "table") return ObservationSpace::finite(c.observations);
  return c.observations.empty() ? ObservationSpace::interval() : ObservationSpace::finite(c.observations);
}

inline LossFunction make_loss(const LossConfig& c) {
  const auto obs = make_observations(c);
  if (c.kind == "square") return LossFunction::square(obs);
  if (c.kind == "absolute") return LossFunction::absolute(obs);
  if (c.kind == "zero_one") return LossFunction::zero_one(c.threshold, obs);
  if (c.kind == "table") return LossFunction::custom_table(c.predictions, c.observations, c.table);
  throw config_error("loss.kind", "unknown loss '" + c.kind + "'");
}

inline PredictionGrid make_grid(const ExperimentConfig& c) {
  if (!c.pool.grid.empty()) return PredictionGrid::explicit_values(c.pool.grid);
  if (c.loss.kind == "table") return PredictionGrid::explicit_values(c.loss.predictions);
  return PredictionGrid::uniform(c.pool.grid_size);
}

inline int rule_level(const ExperimentConfig& c, const RuleConfig& r) { return r.level.value_or(c.m_max); }

inline std::vector<double> rule_points(const ExperimentConfig& c, const RuleConfig& r,
                                       const ApproximationStructure& structure) {
  const int m = rule_level(c, r);
  if (!r.values.empty()) return r.values;
  std::vector<double> out;
  if (r.function) {
    for (const auto& rep : structure.image(m)) out.push_back(std::clamp((*r.function)(structure, rep), 0.0, 1.0));
    return out;
  }
  throw config_error("rule." + r.name, "rule has no point values");
}

template <class Value>
BenchmarkRule<Value> make_rule(const ExperimentConfig& c, const RuleConfig& r, const ApproximationStructure& structure,
                               const ExpertPool<Value>& pool) {
  BenchmarkRule<Value> out;
  out.name = r.name;
  out.level = rule_level(c, r);
  const std::string field = "rule." + r.name;
  if (r.expert != 0) {
    if (r.expert > pool.size())
      throw config_error(field + ".expert", "pool has only " + std::to_string(pool.size()) + " experts");
    const auto i = r.expert - 1;
    if (r.level && *r.level != pool.level(i))
      throw config_error(field + ".level", "expert " + std::to_string(r.expert) + " is a level-" +
                                               std::to_string(pool.level(i)) + " expert");
    out.level = pool.level(i);
    for (auto e : pool.table(i)) out.table.push_back(pool.palette()[e]);
    return out;
  }
  if constexpr (std::is_same_v<Value, double>) {
    if (!r.measures.empty()) throw config_error(field + ".measures", "measure-valued rules need mode = \"randomized\"");
    out.table = rule_points(c, r, structure);
  } else {
    if (!r.measures.empty()) {
      for (const auto& atoms : r.measures) out.table.push_back(FiniteMeasure::from_atoms(atoms));
    } else {
      for (double g : rule_points(c, r, structure)) out.table.push_back(lift(g));
    }
  }
  if (out.table.size() != structure.image_size(out.level))
    throw config_error(field, "needs " + std::to_string(structure.image_size(out.level)) + " table entries, got " +
                                  std::to_string(out.table.size()));
  return out;
}

template <class Value>
ExpertPool<Value> apply_prior_scheme(ExpertPool<Value> pool, const PoolConfig& c) {
  try {
    if (c.prior == "uniform") {
      std::map<std::size_t, double> all;
      const double q = 1.0 / static_cast<double>(pool.size());
      for (std::size_t k = 1; k <= pool.size(); ++k) all[k] = q;
      pool = pool.with_prior_overrides(all);
    }
    for (const auto& [k, q] : c.prior_overrides)
      if (k > pool.size())
        throw config_error("pool.prior_override", "expert " + std::to_string(k) + " is outside the pool of " +
                                                      std::to_string(pool.size()));
    return pool.with_prior_overrides(c.prior_overrides);
  } catch (const invalid_argument_error& e) {
    throw config_error("pool.prior_override", e.what());
  }
}

// ---------------------------------------------------------------------------
// Validation

inline std::vector<Diagnostic> validate(const ExperimentConfig& c) {
  std::vector<Diagnostic> out;
  auto bad = [&](std::string field, std::string message) { out.push_back({std::move(field), std::move(message)}); };
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };

  if (c.mode != "deterministic" && c.mode != "randomized")
    bad("experiment.mode", "must be \"deterministic\" or \"randomized\"");
  if (c.horizon < 1) bad("experiment.horizon", "must be at least 1");
  if (c.horizon > max_horizon) bad("experiment.horizon", "must be at most " + std::to_string(max_horizon));
  if (c.randomized() && c.seeds.empty()) bad("experiment.seeds", "randomized runs need at least one seed");
  if (c.seeds.size() > max_seeds) bad("experiment.seeds", "at most " + std::to_string(max_seeds) + " seeds");

  std::optional<ApproximationStructure> structure;
  try {
    structure.emplace(make_space(c.space), ApproximationStructure::hard_level_limit);
  } catch (const error& e) {
    bad("space", e.what());
  }
  if (structure) {
    if (c.m_max < structure->min_level() || c.m_max > structure->supported_level_limit())
      bad("structure.m_max", "must lie in [" + std::to_string(structure->min_level()) + ", " +
                                 std::to_string(structure->supported_level_limit()) + "] for " +
                                 structure->space().name());
  }

  std::optional<LossFunction> loss;
  try {
    loss = make_loss(c.loss);
  } catch (const error& e) {
    bad("loss", e.what());
  }
  if (loss && !loss->is_convex() && !c.randomized())
    bad("loss.kind", "'" + c.loss.kind + "' is not convex; use mode = \"randomized\"");

  if (c.pool.grid.empty() && c.loss.kind != "table" && c.pool.grid_size < 1) bad("pool.grid_size", "must be at least 1");
  if (c.pool.grid_size > 65535) bad("pool.grid_size", "must be at most 65535");
  for (double g : c.pool.grid)
    if (loss ? !loss->contains_prediction(g) : !in_unit(g)) bad("pool.grid", format_double(g) + " is not a valid prediction");
  if (c.pool.denominator < 1) bad("pool.denominator", "must be at least 1");
  if (c.pool.cap < 1) bad("pool.cap", "must be at least 1");
  if (c.pool.prior != "hierarchical" && c.pool.prior != "uniform")
    bad("pool.prior", "must be \"hierarchical\" or \"uniform\"");
  for (const auto& [k, q] : c.pool.prior_overrides) {
    const std::string f = "pool.prior_override[" + std::to_string(k) + "]";
    if (k < 1) bad(f + ".expert", "expert indices start at 1");
    if (!(q > 0.0) || q > 1.0 || !std::isfinite(q)) bad(f + ".q", "prior must lie in (0, 1], got " + format_double(q));
  }

  if (c.scenarios.empty()) bad("scenario", "at least one scenario is required");
  std::set<std::string> names;
  for (const auto& s : c.scenarios) {
    const std::string f = "scenario." + s.name;
    if (s.name.empty()) bad("scenario.name", "must not be empty");
    if (!names.insert("s:" + s.name).second) bad(f, "duplicate scenario name");
    if (s.kind == ScenarioKind::replay) {
      if (s.replay_path.empty()) bad(f + ".path", "replay scenarios need a path");
    } else if (s.kind != ScenarioKind::adaptive && s.rules.empty()) {
      bad(f + ".rule", "needs at least one observation rule");
    }
    if (s.kind == ScenarioKind::adversarial_switch && s.rules.size() < 2)
      bad(f + ".rule", "adversarial_switch needs at least two observation rules");
    if (!(s.noise >= 0.0)) bad(f + ".noise", "must be >= 0");
    for (const auto& r : s.rules) {
      if (r.kind == ObservationRule::Kind::table && structure) {
        if (r.level < structure->min_level() || r.level > structure->supported_level_limit())
          bad(f + ".rule.level", "level out of range");
        else if (r.table.size() != structure->image_size(r.level))
          bad(f + ".rule.table", "needs 2^level entries");
      }
      if (r.kind == ObservationRule::Kind::parity && c.space.kind != "finite_set")
        bad(f + ".rule.kind", "parity needs a finite_set space");
    }
  }

  if (c.rules.empty()) bad("rule", "at least one benchmark rule is required");
  for (const auto& r : c.rules) {
    const std::string f = "rule." + r.name;
    if (r.name.empty()) bad("rule.name", "must not be empty");
    if (!names.insert("r:" + r.name).second) bad(f, "duplicate rule name");
    const int sources = (!r.values.empty()) + (!r.measures.empty()) + (r.expert != 0) + (r.function.has_value());
    if (sources != 1) bad(f, "set exactly one of values, measures, expert, function");
    if (!r.level && (!r.values.empty() || !r.measures.empty())) bad(f + ".level", "explicit tables need a level");
    const int m = rule_level(c, r);
    if (r.level && (m < 1 || m > c.m_max)) bad(f + ".level", "must lie in [1, m_max]");
    if (structure && m >= structure->min_level() && m <= c.m_max && m <= structure->supported_level_limit()) {
      const auto need = structure->image_size(m);
      if (!r.values.empty() && r.values.size() != need) bad(f + ".values", "needs " + std::to_string(need) + " entries");
      if (!r.measures.empty() && r.measures.size() != need)
        bad(f + ".measures", "needs " + std::to_string(need) + " entries");
    }
    for (double v : r.values)
      if (loss ? !loss->contains_prediction(v) : !in_unit(v)) bad(f + ".values", format_double(v) + " is not a valid prediction");
    if (!r.measures.empty() && !c.randomized()) bad(f + ".measures", "measure-valued rules need mode = \"randomized\"");
    for (const auto& atoms : r.measures) {
      try {
        auto mu = FiniteMeasure::from_atoms(atoms);
        for (const auto& a : mu.atoms())
          if (loss && !loss->contains_prediction(a.point)) bad(f + ".measures", format_double(a.point) + " is not a valid prediction");
      } catch (const error& e) {
        bad(f + ".measures", e.what());
      }
    }
  }

  const auto& v = c.verify;
  if (v.plant != "none" && v.plant != "lemma5" && v.plant != "convexity" && v.plant != "lil")
    bad("verify.plant", "must be none, lemma5, convexity or lil");
  if (v.epsilon && !(*v.epsilon > 0.0)) bad("verify.epsilon", "must be positive");
  if (v.lil_first_round < 3) bad("verify.lil_first_round", "must be at least 3");

  for (int m : c.sweep.m)
    if (m < 1 || (structure && m > structure->supported_level_limit())) bad("sweep.m", "level " + std::to_string(m) + " out of range");
  for (auto g : c.sweep.grid_size)
    if (g < 1 || g > 65535) bad("sweep.grid_size", "grid sizes must lie in [1, 65535]");
  for (auto h : c.sweep.horizon)
    if (h < 1 || h > max_horizon) bad("sweep.horizon", "horizons must lie in [1, " + std::to_string(max_horizon) + "]");
  for (double e : c.sweep.epsilon)
    if (!(e > 0.0)) bad("sweep.epsilon", "must be positive");
  return out;
}

inline void require_valid(const ExperimentConfig& c) {
  auto diagnostics = validate(c);
  if (!diagnostics.empty()) throw config_errors(std::move(diagnostics));
}

// ---------------------------------------------------------------------------
// TOML

namespace detail {

inline const char* scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::iid_noise: return "iid_noise";
    case ScenarioKind::piecewise: return "piecewise";
    case ScenarioKind::adversarial_switch: return "adversarial_switch";
    case ScenarioKind::adaptive: return "adaptive";
    case ScenarioKind::replay: return "replay";
  }
  return "piecewise";
}

inline const char* observation_kind_name(ObservationRule::Kind k) {
  switch (k) {
    case ObservationRule::Kind::constant: return "constant";
    case ObservationRule::Kind::step: return "step";
    case ObservationRule::Kind::sine: return "sine";
    case ObservationRule::Kind::parity: return "parity";
    case ObservationRule::Kind::table: return "table";
  }
  return "constant";
}

// Typed access to one TOML table that records diagnostics and rejects
// unknown keys.
class Reader {
 public:
  Reader(const toml::table* table, std::string path, std::vector<Diagnostic>& diagnostics)
      : table_(table), path_(std::move(path)), diagnostics_(diagnostics) {}

  ~Reader() {
    if (!table_) return;
    for (const auto& [key, node] : *table_)
      if (!seen_.count(std::string(key.str())))
        diagnostics_.push_back({field(std::string(key.str())), "unknown key"});
  }

  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return table_ && table_->contains(key);
  }

  const toml::node* node(const std::string& key) {
    seen_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const auto* n = node(key);
    if (!n) return;
    read_value(*n, field(key), out);
  }

  const toml::table* table(const std::string& key) {
    const auto* n = node(key);
    if (!n) return nullptr;
    if (!n->is_table()) {
      diagnostics_.push_back({field(key), "expected a table"});
      return nullptr;
    }
    return n->as_table();
  }

  std::vector<const toml::table*> tables(const std::string& key) {
    std::vector<const toml::table*> out;
    const auto* n = node(key);
    if (!n) return out;
    if (const auto* arr = n->as_array(); arr && arr->is_array_of_tables()) {
      for (const auto& e : *arr) out.push_back(e.as_table());
    } else if (n->is_table()) {
      out.push_back(n->as_table());
    } else {
      diagnostics_.push_back({field(key), "expected an array of tables"});
    }
    return out;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::vector<Diagnostic>& diagnostics() { return diagnostics_; }

  void read_value(const toml::node& n, const std::string& f, std::string& out) {
    if (auto v = n.value_exact<std::string>()) out = *v;
    else diagnostics_.push_back({f, "expected a string"});
  }
  void read_value(const toml::node& n, const std::string& f, bool& out) {
    if (auto v = n.value_exact<bool>()) out = *v;
    else diagnostics_.push_back({f, "expected a boolean"});
  }
  void read_value(const toml::node& n, const std::string& f, double& out) {
    if (n.is_number()) out = *n.value<double>();
    else diagnostics_.push_back({f, "expected a number"});
  }
  void read_value(const toml::node& n, const std::string& f, int& out) {
    auto v = n.value_exact<std::int64_t>();
    if (v && *v >= -1000000 && *v <= 1000000) out = static_cast<int>(*v);
    else diagnostics_.push_back({f, "expected a small integer"});
  }
  void read_value(const toml::node& n, const std::string& f, std::size_t& out) {
    auto v = n.value_exact<std::int64_t>();
    if (v && *v >= 0) out = static_cast<std::size_t>(*v);
    else diagnostics_.push_back({f, "expected a non-negative integer"});
  }
  template <class T>
  void read_value(const toml::node& n, const std::string& f, std::optional<T>& out) {
    T v{};
    const auto before = diagnostics_.size();
    read_value(n, f, v);
    if (diagnostics_.size() == before) out = v;
  }
  template <class T>
  void read_value(const toml::node& n, const std::string& f, std::vector<T>& out) {
    const auto* arr = n.as_array();
    if (!arr) {
      diagnostics_.push_back({f, "expected an array"});
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      T v{};
      read_value(*arr->get(i), f + "[" + std::to_string(i) + "]", v);
      out.push_back(std::move(v));
    }
  }

 private:
  const toml::table* table_;
  std::string path_;
  std::vector<Diagnostic>& diagnostics_;
  std::set<std::string> seen_;
};

inline ObservationRule read_observation_rule(const toml::table* t, const std::string& path,
                                             std::vector<Diagnostic>& diagnostics) {
  ObservationRule r;
  Reader in(t, path, diagnostics);
  std::string kind = "constant";
  in.get("kind", kind);
  if (kind == "constant") r.kind = ObservationRule::Kind::constant;
  else if (kind == "step") r.kind = ObservationRule::Kind::step;
  else if (kind == "sine") r.kind = ObservationRule::Kind::sine;
  else if (kind == "parity") r.kind = ObservationRule::Kind::parity;
  else if (kind == "table") r.kind = ObservationRule::Kind::table;
  else diagnostics.push_back({in.field("kind"), "unknown observation rule '" + kind + "'"});
  in.get("value", r.value);
  in.get("threshold", r.threshold);
  in.get("low", r.low);
  in.get("high", r.high);
  in.get("frequency", r.frequency);
  in.get("level", r.level);
  in.get("table", r.table);
  return r;
}

inline toml::table write_observation_rule(const ObservationRule& r) {
  toml::table t;
  t.insert("kind", observation_kind_name(r.kind));
  switch (r.kind) {
    case ObservationRule::Kind::constant: t.insert("value", r.value); break;
    case ObservationRule::Kind::step:
      t.insert("threshold", r.threshold);
      t.insert("low", r.low);
      t.insert("high", r.high);
      break;
    case ObservationRule::Kind::sine: t.insert("frequency", r.frequency); break;
    case ObservationRule::Kind::parity:
      t.insert("low", r.low);
      t.insert("high", r.high);
      break;
    case ObservationRule::Kind::table: {
      t.insert("level", r.level);
      toml::array a;
      for (double v : r.table) a.push_back(v);
      t.insert("table", a);
      break;
    }
  }
  return t;
}

// Fields not written for a kind are reset so parse(serialize(c)) == c.
inline ObservationRule normalized(ObservationRule r) {
  ObservationRule base;
  base.kind = r.kind;
  switch (r.kind) {
    case ObservationRule::Kind::constant: base.value = r.value; break;
    case ObservationRule::Kind::step:
      base.threshold = r.threshold;
      base.low = r.low;
      base.high = r.high;
      break;
    case ObservationRule::Kind::sine: base.frequency = r.frequency; break;
    case ObservationRule::Kind::parity:
      base.low = r.low;
      base.high = r.high;
      break;
    case ObservationRule::Kind::table:
      base.level = r.level;
      base.table = r.table;
      break;
  }
  return base;
}

template <class T>
toml::array to_array(const std::vector<T>& v) {
  toml::array a;
  for (const auto& e : v) {
    if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, double>) a.push_back(e);
    else a.push_back(static_cast<std::int64_t>(e));
  }
  return a;
}

}  // namespace detail

// Parses TOML text. Relative replay paths are resolved against base_dir when
// it is non-empty. Throws config_errors listing every problem found.
inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  std::vector<Diagnostic> diagnostics;
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream where;
    where << "line " << e.source().begin.line << ", column " << e.source().begin.column;
    throw config_errors({{"toml", std::string(e.description()) + " (" + where.str() + ")"}});
  }

  ExperimentConfig c;
  {
    detail::Reader top(&root, "", diagnostics);

    detail::Reader exp(top.table("experiment"), "experiment", diagnostics);
    exp.get("name", c.name);
    exp.get("mode", c.mode);
    exp.get("horizon", c.horizon);
    exp.get("out_dir", c.out_dir);
    if (exp.has("seeds")) exp.get("seeds", c.seeds);
    if (exp.has("seed_count")) {
      std::size_t count = 0;
      std::uint64_t base = 1;
      exp.get("seed_count", count);
      exp.get("seed_base", base);
      if (exp.has("seeds")) diagnostics.push_back({"experiment.seed_count", "give either seeds or seed_count"});
      if (count > max_seeds) diagnostics.push_back({"experiment.seed_count", "at most " + std::to_string(max_seeds) + " seeds"});
      else {
        c.seeds.clear();
        for (std::size_t i = 0; i < count; ++i) c.seeds.push_back(base + i);
      }
    } else {
      exp.has("seed_base");
    }

    detail::Reader space(top.table("space"), "space", diagnostics);
    space.get("kind", c.space.kind);
    space.get("dimension", c.space.dimension);
    space.get("labels", c.space.labels);

    detail::Reader structure(top.table("structure"), "structure", diagnostics);
    structure.get("m_max", c.m_max);

    detail::Reader loss(top.table("loss"), "loss", diagnostics);
    loss.get("kind", c.loss.kind);
    loss.get("observations", c.loss.observations);
    loss.get("threshold", c.loss.threshold);
    loss.get("predictions", c.loss.predictions);
    loss.get("table", c.loss.table);

    detail::Reader pool(top.table("pool"), "pool", diagnostics);
    pool.get("grid_size", c.pool.grid_size);
    pool.get("grid", c.pool.grid);
    pool.get("denominator", c.pool.denominator);
    pool.get("cap", c.pool.cap);
    pool.get("prior", c.pool.prior);
    for (const auto* t : pool.tables("prior_override")) {
      detail::Reader o(t, "pool.prior_override", diagnostics);
      std::size_t k = 0;
      double q = 0.0;
      if (!o.has("expert") || !o.has("q")) diagnostics.push_back({"pool.prior_override", "needs expert and q"});
      o.get("expert", k);
      o.get("q", q);
      if (c.pool.prior_overrides.count(k)) diagnostics.push_back({"pool.prior_override", "expert " + std::to_string(k) + " overridden twice"});
      c.pool.prior_overrides[k] = q;
    }

    for (const auto* t : top.tables("scenario")) {
      RealityScenario s;
      detail::Reader in(t, "scenario", diagnostics);
      in.get("name", s.name);
      const std::string path = "scenario." + s.name;
      std::string kind = "piecewise";
      in.get("kind", kind);
      if (kind == "iid_noise") s.kind = ScenarioKind::iid_noise;
      else if (kind == "piecewise") s.kind = ScenarioKind::piecewise;
      else if (kind == "adversarial_switch") s.kind = ScenarioKind::adversarial_switch;
      else if (kind == "adaptive") s.kind = ScenarioKind::adaptive;
      else if (kind == "replay") s.kind = ScenarioKind::replay;
      else diagnostics.push_back({path + ".kind", "unknown scenario kind '" + kind + "'"});
      std::string sampler = "uniform";
      in.get("sampler", sampler);
      if (sampler == "uniform") s.sampler = SamplerKind::uniform;
      else if (sampler == "sweep") s.sampler = SamplerKind::sweep;
      else diagnostics.push_back({path + ".sampler", "must be \"uniform\" or \"sweep\""});
      in.get("seed", s.seed);
      in.get("noise", s.noise);
      in.get("switch_period", s.switch_period);
      in.get("switch_at", s.switch_at);
      in.get("path", s.replay_path);
      if (!s.replay_path.empty() && !base_dir.empty() && std::filesystem::path(s.replay_path).is_relative())
        s.replay_path = (base_dir / s.replay_path).lexically_normal().string();
      for (const auto* r : in.tables("rule")) s.rules.push_back(detail::normalized(detail::read_observation_rule(r, path + ".rule", diagnostics)));
      c.scenarios.push_back(std::move(s));
    }

    for (const auto* t : top.tables("rule")) {
      RuleConfig r;
      detail::Reader in(t, "rule", diagnostics);
      in.get("name", r.name);
      const std::string path = "rule." + r.name;
      in.get("level", r.level);
      in.get("values", r.values);
      in.get("expert", r.expert);
      if (const auto* n = in.node("measures")) {
        std::vector<std::vector<std::vector<double>>> raw;
        in.read_value(*n, path + ".measures", raw);
        for (const auto& cell : raw) {
          std::vector<Atom> atoms;
          for (const auto& pair : cell) {
            if (pair.size() != 2) {
              diagnostics.push_back({path + ".measures", "atoms are [point, mass] pairs"});
              continue;
            }
            atoms.push_back({pair[0], pair[1]});
          }
          r.measures.push_back(std::move(atoms));
        }
      }
      if (const auto* f = in.table("function")) r.function = detail::normalized(detail::read_observation_rule(f, path + ".function", diagnostics));
      c.rules.push_back(std::move(r));
    }

    detail::Reader verify(top.table("verify"), "verify", diagnostics);
    verify.get("epsilon", c.verify.epsilon);
    verify.get("lil_first_round", c.verify.lil_first_round);
    verify.get("plant", c.verify.plant);
    verify.get("mean_comparison_samples", c.verify.mean_comparison_samples);
    verify.get("fm_samples", c.verify.fm_samples);
    verify.get("seed", c.verify.seed);

    detail::Reader sweep(top.table("sweep"), "sweep", diagnostics);
    sweep.get("m", c.sweep.m);
    sweep.get("grid_size", c.sweep.grid_size);
    sweep.get("horizon", c.sweep.horizon);
    sweep.get("epsilon", c.sweep.epsilon);
  }
  if (!diagnostics.empty()) throw config_errors(std::move(diagnostics));
  require_valid(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config", "cannot read '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

// Canonical TOML text: every field written, fixed key order.
inline std::string serialize_config(const ExperimentConfig& c) {
  using detail::to_array;
  toml::table root;

  root.insert("experiment", toml::table{{"name", c.name},
                                        {"mode", c.mode},
                                        {"horizon", static_cast<std::int64_t>(c.horizon)},
                                        {"seeds", to_array(c.seeds)},
                                        {"out_dir", c.out_dir}});
  toml::table space{{"kind", c.space.kind}, {"dimension", static_cast<std::int64_t>(c.space.dimension)}};
  if (!c.space.labels.empty()) space.insert("labels", to_array(c.space.labels));
  root.insert("space", space);
  root.insert("structure", toml::table{{"m_max", c.m_max}});

  toml::table loss{{"kind", c.loss.kind}, {"threshold", c.loss.threshold}};
  if (!c.loss.observations.empty()) loss.insert("observations", to_array(c.loss.observations));
  if (!c.loss.predictions.empty()) loss.insert("predictions", to_array(c.loss.predictions));
  if (!c.loss.table.empty()) {
    toml::array rows;
    for (const auto& row : c.loss.table) rows.push_back(to_array(row));
    loss.insert("table", rows);
  }
  root.insert("loss", loss);

  toml::table pool{{"grid_size", static_cast<std::int64_t>(c.pool.grid_size)},
                   {"denominator", static_cast<std::int64_t>(c.pool.denominator)},
                   {"cap", static_cast<std::int64_t>(c.pool.cap)},
                   {"prior", c.pool.prior}};
  if (!c.pool.grid.empty()) pool.insert("grid", to_array(c.pool.grid));
  if (!c.pool.prior_overrides.empty()) {
    toml::array overrides;
    for (const auto& [k, q] : c.pool.prior_overrides)
      overrides.push_back(toml::table{{"expert", static_cast<std::int64_t>(k)}, {"q", q}});
    pool.insert("prior_override", overrides);
  }
  root.insert("pool", pool);

  toml::array scenarios;
  for (const auto& s : c.scenarios) {
    toml::table t{{"name", s.name},
                  {"kind", detail::scenario_kind_name(s.kind)},
                  {"sampler", s.sampler == SamplerKind::uniform ? "uniform" : "sweep"},
                  {"seed", static_cast<std::int64_t>(s.seed)},
                  {"noise", s.noise},
                  {"switch_period", static_cast<std::int64_t>(s.switch_period)}};
    if (!s.switch_at.empty()) t.insert("switch_at", to_array(s.switch_at));
    if (!s.replay_path.empty()) t.insert("path", s.replay_path);
    if (!s.rules.empty()) {
      toml::array rules;
      for (const auto& r : s.rules) rules.push_back(detail::write_observation_rule(r));
      t.insert("rule", rules);
    }
    scenarios.push_back(t);
  }
  if (!scenarios.empty()) root.insert("scenario", scenarios);

  toml::array rules;
  for (const auto& r : c.rules) {
    toml::table t{{"name", r.name}};
    if (r.level) t.insert("level", *r.level);
    if (!r.values.empty()) t.insert("values", to_array(r.values));
    if (r.expert != 0) t.insert("expert", static_cast<std::int64_t>(r.expert));
    if (!r.measures.empty()) {
      toml::array cells;
      for (const auto& atoms : r.measures) {
        toml::array cell;
        for (const auto& a : atoms) cell.push_back(toml::array{a.point, a.mass});
        cells.push_back(cell);
      }
      t.insert("measures", cells);
    }
    if (r.function) t.insert("function", detail::write_observation_rule(*r.function));
    rules.push_back(t);
  }
  if (!rules.empty()) root.insert("rule", rules);

  toml::table verify{{"lil_first_round", static_cast<std::int64_t>(c.verify.lil_first_round)},
                     {"plant", c.verify.plant},
                     {"mean_comparison_samples", static_cast<std::int64_t>(c.verify.mean_comparison_samples)},
                     {"fm_samples", static_cast<std::int64_t>(c.verify.fm_samples)},
                     {"seed", static_cast<std::int64_t>(c.verify.seed)}};
  if (c.verify.epsilon) verify.insert("epsilon", *c.verify.epsilon);
  root.insert("verify", verify);

  if (!c.sweep.empty()) {
    toml::table sweep;
    if (!c.sweep.m.empty()) sweep.insert("m", to_array(c.sweep.m));
    if (!c.sweep.grid_size.empty()) sweep.insert("grid_size", to_array(c.sweep.grid_size));
    if (!c.sweep.horizon.empty()) sweep.insert("horizon", to_array(c.sweep.horizon));
    if (!c.sweep.epsilon.empty()) sweep.insert("epsilon", to_array(c.sweep.epsilon));
    root.insert("sweep", sweep);
  }

  std::ostringstream out;
  out << toml::toml_formatter(root, toml::toml_formatter::default_flags & ~toml::format_flags::indentation);
  out << '\n';
  return out.str();
}

// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return out;
}

// --seed-override K: every scenario seed becomes K and the predictor seeds
// become K, K+1, ... (same count).
inline void apply_seed_override(ExperimentConfig& c, std::uint64_t k) {
  for (auto& s : c.scenarios) s.seed = k;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) c.seeds[i] = k + i;
}

}  // namespace waa
