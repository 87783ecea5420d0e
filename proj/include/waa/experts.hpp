#pragma once

// m-elementary experts: prediction rules constant on the cells of phi_m and
// valued in a finite palette (grid points, or grid-supported measures for the
// randomized game), with prior weights q_k.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "waa/error.hpp"
#include "waa/losses.hpp"
#include "waa/measures.hpp"
#include "waa/numeric.hpp"
#include "waa/spaces.hpp"

namespace waa {

// Finite slice of the dense countable set Gamma*.
class PredictionGrid {
 public:
  // {j / (G - 1) : j = 0..G-1}; a single-point grid is {1/2}.
  static PredictionGrid uniform(std::size_t size) {
    if (size == 0) throw invalid_argument_error("grid size must be positive");
    std::vector<double> v(size);
    if (size == 1) v[0] = 0.5;
    for (std::size_t j = 0; size > 1 && j < size; ++j) v[j] = static_cast<double>(j) / static_cast<double>(size - 1);
    return PredictionGrid(std::move(v));
  }

  static PredictionGrid explicit_values(std::vector<double> values) {
    if (values.empty()) throw invalid_argument_error("grid needs at least one value");
    std::sort(values.begin(), values.end());
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] == values[i - 1]) throw invalid_argument_error("grid values must be distinct");
    return PredictionGrid(std::move(values));
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  explicit PredictionGrid(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

// All measures supported on the grid whose masses are multiples of
// 1/denominator, in lexicographic order of their mass vectors (descending
// mass on the first grid point first).
inline std::vector<FiniteMeasure> rational_measures(const PredictionGrid& grid, std::size_t denominator) {
  if (denominator == 0) throw invalid_argument_error("measure denominator must be positive");
  const auto g = grid.size();
  std::vector<FiniteMeasure> out;
  std::vector<std::size_t> counts(g, 0);
  // Enumerate compositions of `denominator` into g parts.
  auto recurse = [&](auto&& self, std::size_t slot, std::size_t left) -> void {
    if (slot + 1 == g) {
      counts[slot] = left;
      std::vector<Atom> atoms;
      for (std::size_t i = 0; i < g; ++i)
        if (counts[i] > 0)
          atoms.push_back({grid.values()[i], static_cast<double>(counts[i]) / static_cast<double>(denominator)});
      out.push_back(FiniteMeasure::from_atoms(std::move(atoms)));
      return;
    }
    for (std::size_t c = left + 1; c-- > 0;) {
      counts[slot] = c;
      self(self, slot + 1, left - c);
    }
  };
  recurse(recurse, 0, denominator);
  return out;
}

// Prediction-value policy shared by the pool, engine and harness.
template <class Value>
struct ValueTraits;

template <>
struct ValueTraits<double> {
  static double loss(const LossFunction& f, double g, double y) { return f.evaluate(g, y); }
  static double distance(const LossFunction& f, double a, double b) { return pseudo_metric(f, a, b); }
  static double point(double g) { return g; }
  static std::string repr(double g) { return format_double(g); }
  static nlohmann::json to_json(double g) { return g; }
  // Weighted combination of palette values.
  static double combine(std::span<const double> weights, std::span<const double> palette) {
    double total = 0.0;
    for (std::size_t j = 0; j < palette.size(); ++j) total += weights[j] * palette[j];
    return total;
  }
};

template <>
struct ValueTraits<FiniteMeasure> {
  static double loss(const LossFunction& f, const FiniteMeasure& g, double y) { return expected_loss(g, f, y); }
  static double distance(const LossFunction& f, const FiniteMeasure& a, const FiniteMeasure& b) {
    return fm_distance(a, b, f);
  }
  static double point(const FiniteMeasure& g) { return g.mean(); }
  static std::string repr(const FiniteMeasure& g) { return g.repr(); }
  static nlohmann::json to_json(const FiniteMeasure& g) {
    auto arr = nlohmann::json::array();
    for (const auto& a : g.atoms()) arr.push_back({a.point, a.mass});
    return arr;
  }
  static FiniteMeasure combine(std::span<const double> weights, std::span<const FiniteMeasure> palette) {
    return mix(weights, palette);
  }
};

struct ExpertSpec {
  int level;
  std::vector<std::uint16_t> table;  // palette index per image cell of phi_level
  double log_prior;
};

// Immutable, indexed family of elementary experts. Public indices are 1-based.
template <class Value>
class ExpertPool {
 public:
  static constexpr std::size_t default_cap = 1'000'000;

  ExpertPool(ApproximationStructure structure, std::vector<Value> palette, std::vector<ExpertSpec> experts)
      : structure_(std::move(structure)), palette_(std::move(palette)) {
    if (palette_.empty()) throw invalid_argument_error("expert palette is empty");
    if (palette_.size() > std::numeric_limits<std::uint16_t>::max())
      throw invalid_argument_error("expert palette too large");
    if (experts.empty()) throw invalid_argument_error("expert pool is empty");
    for (auto& e : experts) {
      structure_.check_level(e.level);
      if (e.table.size() != structure_.image_size(e.level))
        throw invalid_argument_error("expert table must have 2^m entries");
      for (auto v : e.table)
        if (v >= palette_.size()) throw invalid_argument_error("expert table entry outside palette");
      if (!(e.log_prior <= 0.0) || !std::isfinite(e.log_prior))
        throw invalid_argument_error("expert priors must lie in (0, 1]");
      auto it = std::find(levels_.begin(), levels_.end(), e.level);
      std::size_t slot = static_cast<std::size_t>(it - levels_.begin());
      if (it == levels_.end()) levels_.push_back(e.level);
      level_slot_.push_back(static_cast<std::uint32_t>(slot));
      level_of_.push_back(e.level);
      offsets_.push_back(tables_.size());
      tables_.insert(tables_.end(), e.table.begin(), e.table.end());
      log_priors_.push_back(e.log_prior);
    }
    if (log_sum_exp(log_priors_) > 1e-12) throw invalid_argument_error("expert priors sum to more than 1");
  }

  const ApproximationStructure& structure() const noexcept { return structure_; }
  const std::vector<Value>& palette() const noexcept { return palette_; }
  std::size_t size() const noexcept { return log_priors_.size(); }

  // Distinct expert levels in first-appearance order.
  const std::vector<int>& levels() const noexcept { return levels_; }

  // Internal 0-based accessors.
  int level(std::size_t i) const { return level_of_.at(i); }
  std::size_t level_slot(std::size_t i) const noexcept { return level_slot_[i]; }
  std::uint16_t entry(std::size_t i, std::size_t cell) const noexcept { return tables_[offsets_[i] + cell]; }
  std::span<const std::uint16_t> table(std::size_t i) const {
    return {tables_.data() + offsets_.at(i), structure_.image_size(level_of_[i])};
  }
  const std::vector<double>& log_priors() const noexcept { return log_priors_; }
  double log_prior(std::size_t i) const { return log_priors_.at(i); }

  // D_k(x) for the 1-based index k.
  const Value& predict(std::size_t k, const Signal& x) const {
    const auto i = checked(k);
    return palette_[entry(i, structure_.cell_index(level_of_[i], x))];
  }

  // Cells of x at every pool level, indexed like levels().
  std::vector<std::size_t> cells(const Signal& x) const {
    std::vector<std::size_t> out;
    out.reserve(levels_.size());
    for (int m : levels_) out.push_back(structure_.cell_index(m, x));
    return out;
  }

  // Copy with q_k replaced for the listed 1-based indices.
  ExpertPool with_prior_overrides(const std::map<std::size_t, double>& overrides) const {
    ExpertPool out = *this;
    for (const auto& [k, q] : overrides) {
      if (!(q > 0.0) || q > 1.0) throw invalid_argument_error("prior override for expert " + std::to_string(k) + " must lie in (0, 1]");
      out.log_priors_[checked(k)] = std::log(q);
    }
    if (log_sum_exp(out.log_priors_) > 1e-12) throw invalid_argument_error("overridden priors sum to more than 1");
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["space"] = structure_.space().name();
    j["max_level"] = structure_.max_level();
    auto pal = nlohmann::json::array();
    for (const auto& v : palette_) pal.push_back(ValueTraits<Value>::to_json(v));
    j["palette"] = pal;
    auto experts = nlohmann::json::array();
    for (std::size_t i = 0; i < size(); ++i) {
      auto t = table(i);
      experts.push_back({{"index", i + 1},
                         {"level", level_of_[i]},
                         {"table", std::vector<std::uint16_t>(t.begin(), t.end())},
                         {"log_prior", log_priors_[i]}});
    }
    j["experts"] = experts;
    return j;
  }

  std::size_t checked(std::size_t k) const {
    if (k < 1 || k > size()) throw invalid_argument_error("expert index " + std::to_string(k) + " out of range");
    return k - 1;
  }

 private:
  ApproximationStructure structure_;
  std::vector<Value> palette_;
  std::vector<int> levels_;
  std::vector<std::uint32_t> level_slot_;
  std::vector<int> level_of_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint16_t> tables_;
  std::vector<double> log_priors_;
};

using DeterministicPool = ExpertPool<double>;
using RandomizedPool = ExpertPool<FiniteMeasure>;

// ln q for a level-m expert under the hierarchical prior
//   q = (2^-m / Z) * P^-(2^m),  Z = sum_{levels} 2^-m,
// where P is the palette size. Sums to 1 over a complete enumeration.
inline double hierarchical_log_prior(int m, std::size_t palette_size, std::span<const int> levels) {
  double z = 0.0;
  for (int l : levels) z += std::ldexp(1.0, -l);
  return -m * std::log(2.0) - std::log(z) - std::ldexp(1.0, m) * std::log(static_cast<double>(palette_size));
}

// Every m-elementary expert for m = min level..m_max, ordered by level and
// then lexicographically by table (cell 0 most significant).
template <class Value>
ExpertPool<Value> enumerate_pool_over(const ApproximationStructure& structure, std::vector<Value> palette, int m_max,
                                      std::size_t cap = ExpertPool<Value>::default_cap) {
  if (m_max < structure.min_level() || m_max > structure.max_level())
    throw invalid_argument_error("pool max level " + std::to_string(m_max) + " outside the structure's levels");
  const std::size_t p = palette.size();
  if (p == 0) throw invalid_argument_error("expert palette is empty");
  std::vector<int> levels;
  for (int m = structure.min_level(); m <= m_max; ++m) levels.push_back(m);

  std::size_t total = 0;
  for (int m : levels) {
    const double log_count = std::ldexp(1.0, m) * std::log(static_cast<double>(p));
    const double count = std::round(std::exp(log_count));
    if (log_count > std::log(static_cast<double>(cap)) + 1e-9 || total + static_cast<std::size_t>(count) > cap)
      throw resource_limit_error("level " + std::to_string(m) + " brings the pool past the cap of " +
                                     std::to_string(cap) + " experts",
                                 m);
    total += static_cast<std::size_t>(count);
  }

  std::vector<ExpertSpec> experts;
  experts.reserve(total);
  for (int m : levels) {
    const std::size_t cells = structure.image_size(m);
    const double lq = hierarchical_log_prior(m, p, levels);
    const auto count = static_cast<std::size_t>(std::round(std::pow(static_cast<double>(p), static_cast<double>(cells))));
    for (std::size_t r = 0; r < count; ++r) {
      std::vector<std::uint16_t> table(cells);
      std::size_t rest = r;
      for (std::size_t c = cells; c-- > 0;) {
        table[c] = static_cast<std::uint16_t>(rest % p);
        rest /= p;
      }
      experts.push_back({m, std::move(table), lq});
    }
  }
  return ExpertPool<Value>(structure, std::move(palette), std::move(experts));
}

inline DeterministicPool enumerate_pool(const ApproximationStructure& structure, const PredictionGrid& grid, int m_max,
                                        std::size_t cap = DeterministicPool::default_cap) {
  return enumerate_pool_over<double>(structure, grid.values(), m_max, cap);
}

inline RandomizedPool enumerate_randomized_pool(const ApproximationStructure& structure, const PredictionGrid& grid,
                                                std::size_t denominator, int m_max,
                                                std::size_t cap = RandomizedPool::default_cap) {
  return enumerate_pool_over<FiniteMeasure>(structure, rational_measures(grid, denominator), m_max, cap);
}

template <class Value>
const Value& predict_expert(const ExpertPool<Value>& pool, std::size_t k, const Signal& x) {
  return pool.predict(k, x);
}

struct NearestExpert {
  std::size_t index;  // 1-based
  double delta;       // max over cells of the distance to the rule's value
};

// Pool expert at the rule's level minimizing the worst-cell distance to the
// rule's table (pseudo-metric for points, Fortet-Mourier for measures).
// Ties go to the lowest index.
template <class Value>
NearestExpert nearest_expert(const ExpertPool<Value>& pool, int level, std::span<const Value> rule,
                             const LossFunction& loss) {
  const auto& structure = pool.structure();
  structure.check_level(level);
  if (rule.size() != structure.image_size(level)) throw invalid_argument_error("rule table must have 2^m entries");
  const auto& palette = pool.palette();

  // dist[c][j] = distance(rule(c), palette_j)
  std::vector<std::vector<double>> dist(rule.size(), std::vector<double>(palette.size()));
  double delta = 0.0;
  for (std::size_t c = 0; c < rule.size(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < palette.size(); ++j) {
      dist[c][j] = ValueTraits<Value>::distance(loss, rule[c], palette[j]);
      best = std::min(best, dist[c][j]);
    }
    delta = std::max(delta, best);
  }

  bool any_level = false;
  std::size_t best_index = 0;
  double best_worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.level(i) != level) continue;
    any_level = true;
    auto t = pool.table(i);
    double worst = 0.0;
    for (std::size_t c = 0; c < t.size() && worst <= best_worst; ++c) worst = std::max(worst, dist[c][t[c]]);
    if (worst < best_worst) {
      best_worst = worst;
      best_index = i + 1;
      if (worst <= delta) break;  // nothing at this level can do better
    }
  }
  if (!any_level) throw invalid_argument_error("pool has no level-" + std::to_string(level) + " experts");
  return {best_index, best_worst};
}

}  // namespace waa
