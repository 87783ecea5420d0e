#pragma once

// Loss functions lambda(gamma, y) on a prediction space Gamma and observation
// space Y, with the pseudo-metric rho(g, g') = sup_y |lambda(g, y) - lambda(g', y)|.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "waa/error.hpp"

namespace waa {

enum class LossKind { square, absolute, zero_one, custom_table, custom_function };

// Observation space: the unit interval when `values` is empty, else the listed points.
struct ObservationSpace {
  std::vector<double> values;

  static ObservationSpace interval() { return {}; }
  static ObservationSpace finite(std::vector<double> values) {
    if (values.empty()) throw invalid_argument_error("finite observation space needs at least one value");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return {std::move(values)};
  }

  bool is_finite() const noexcept { return !values.empty(); }

  bool contains(double y) const noexcept {
    if (!is_finite()) return y >= 0.0 && y <= 1.0;
    return std::find(values.begin(), values.end(), y) != values.end();
  }

  // Nearest member; used to project generated observations into Y.
  double project(double y) const noexcept {
    if (!is_finite()) return std::clamp(y, 0.0, 1.0);
    double best = values.front();
    for (double v : values)
      if (std::abs(v - y) < std::abs(best - y)) best = v;
    return best;
  }

  friend bool operator==(const ObservationSpace&, const ObservationSpace&) = default;
};

class LossFunction {
 public:
  static constexpr double infinite_lipschitz = std::numeric_limits<double>::infinity();

  static LossFunction square(ObservationSpace obs = ObservationSpace::interval()) {
    check_unit_observations(obs);
    return LossFunction(LossKind::square, std::move(obs), 1.0, 2.0, true);
  }

  static LossFunction absolute(ObservationSpace obs = ObservationSpace::interval()) {
    check_unit_observations(obs);
    return LossFunction(LossKind::absolute, std::move(obs), 1.0, 1.0, true);
  }

  // 1 when gamma and y fall on different sides of `threshold`, else 0.
  static LossFunction zero_one(double threshold, ObservationSpace obs = ObservationSpace::interval()) {
    check_unit_observations(obs);
    LossFunction f(LossKind::zero_one, std::move(obs), 1.0, infinite_lipschitz, false);
    f.threshold_ = threshold;
    return f;
  }

  // table[i][j] = lambda(predictions[i], observations[j]) on a finite Gamma.
  static LossFunction custom_table(std::vector<double> predictions, std::vector<double> observations,
                                   std::vector<std::vector<double>> table) {
    if (predictions.empty() || observations.empty())
      throw invalid_argument_error("custom loss needs nonempty prediction and observation sets");
    if (table.size() != predictions.size())
      throw invalid_argument_error("custom loss table needs one row per prediction");
    for (const auto& row : table)
      if (row.size() != observations.size())
        throw invalid_argument_error("custom loss table needs one column per observation");
    for (std::size_t i = 0; i < predictions.size(); ++i)
      for (std::size_t j = i + 1; j < predictions.size(); ++j)
        if (predictions[i] == predictions[j]) throw invalid_argument_error("duplicate custom prediction");
    for (std::size_t i = 0; i < observations.size(); ++i)
      for (std::size_t j = i + 1; j < observations.size(); ++j)
        if (observations[i] == observations[j]) throw invalid_argument_error("duplicate custom observation");

    double bound = 0.0;
    double lip = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
      for (std::size_t j = 0; j < observations.size(); ++j) {
        if (!std::isfinite(table[i][j])) throw invalid_argument_error("custom loss values must be finite");
        bound = std::max(bound, std::abs(table[i][j]));
        for (std::size_t k = 0; k < i; ++k)
          lip = std::max(lip, std::abs(table[i][j] - table[k][j]) / std::abs(predictions[i] - predictions[k]));
      }
    ObservationSpace obs{observations};
    LossFunction f(LossKind::custom_table, std::move(obs), bound, lip, false);
    f.predictions_ = std::move(predictions);
    f.table_ = std::move(table);
    return f;
  }

  // Arbitrary callable on Gamma = [0, 1] with the caller's bound, Lipschitz
  // constant and convexity claim.
  static LossFunction custom_function(std::function<double(double, double)> fn, double bound, double lipschitz,
                                      bool convex, ObservationSpace obs = ObservationSpace::interval()) {
    if (!fn) throw invalid_argument_error("custom loss needs a callable");
    if (!(bound >= 0.0) || !(lipschitz >= 0.0)) throw invalid_argument_error("bound and Lipschitz must be >= 0");
    LossFunction f(LossKind::custom_function, std::move(obs), bound, lipschitz, convex);
    f.fn_ = std::move(fn);
    return f;
  }

  LossKind kind() const noexcept { return kind_; }
  const ObservationSpace& observations() const noexcept { return obs_; }
  double bound() const noexcept { return bound_; }
  double lipschitz_constant() const noexcept { return lipschitz_; }
  bool is_convex() const noexcept { return convex_; }
  double threshold() const noexcept { return threshold_; }

  // Finite Gamma for custom tables; empty means Gamma = [0, 1].
  const std::vector<double>& prediction_points() const noexcept { return predictions_; }

  bool contains_prediction(double g) const noexcept {
    if (kind_ == LossKind::custom_table) return prediction_slot(g).has_value();
    return g >= 0.0 && g <= 1.0;
  }

  double evaluate(double g, double y) const {
    if (!contains_prediction(g)) throw domain_error("prediction " + std::to_string(g) + " outside Gamma");
    if (!obs_.contains(y)) throw domain_error("observation " + std::to_string(y) + " outside Y");
    return evaluate_unchecked(g, y);
  }

  double evaluate_unchecked(double g, double y) const {
    switch (kind_) {
      case LossKind::square: return (g - y) * (g - y);
      case LossKind::absolute: return std::abs(g - y);
      case LossKind::zero_one: return (g >= threshold_) != (y >= threshold_) ? 1.0 : 0.0;
      case LossKind::custom_table: {
        const auto i = *prediction_slot(g);
        const auto j = static_cast<std::size_t>(std::find(obs_.values.begin(), obs_.values.end(), y) -
                                                obs_.values.begin());
        return table_[i][j];
      }
      case LossKind::custom_function: return fn_(g, y);
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind_) {
      case LossKind::square: return "square";
      case LossKind::absolute: return "absolute";
      case LossKind::zero_one: return "zero_one";
      case LossKind::custom_table: return "custom_table";
      case LossKind::custom_function: return "custom_function";
    }
    return {};
  }

 private:
  LossFunction(LossKind kind, ObservationSpace obs, double bound, double lip, bool convex)
      : kind_(kind), obs_(std::move(obs)), bound_(bound), lipschitz_(lip), convex_(convex) {}

  static void check_unit_observations(const ObservationSpace& obs) {
    for (double v : obs.values)
      if (!(v >= 0.0 && v <= 1.0)) throw invalid_argument_error("built-in losses need observations in [0, 1]");
  }

  std::optional<std::size_t> prediction_slot(double g) const noexcept {
    for (std::size_t i = 0; i < predictions_.size(); ++i)
      if (std::abs(predictions_[i] - g) <= 1e-12) return i;
    return std::nullopt;
  }

  LossKind kind_;
  ObservationSpace obs_;
  double bound_;
  double lipschitz_;
  bool convex_;
  double threshold_ = 0.5;
  std::vector<double> predictions_;
  std::vector<std::vector<double>> table_;
  std::function<double(double, double)> fn_;
};

// rho(g, g') = sup_y |lambda(g, y) - lambda(g', y)|: exhaustive on a finite Y,
// closed form for the built-in losses on Y = [0, 1].
inline double pseudo_metric(const LossFunction& loss, double g, double g2) {
  if (!loss.contains_prediction(g) || !loss.contains_prediction(g2))
    throw domain_error("pseudo_metric arguments outside Gamma");
  const auto& obs = loss.observations();
  if (obs.is_finite()) {
    double sup = 0.0;
    for (double y : obs.values)
      sup = std::max(sup, std::abs(loss.evaluate_unchecked(g, y) - loss.evaluate_unchecked(g2, y)));
    return sup;
  }
  switch (loss.kind()) {
    case LossKind::square: {
      // |g - g'| |g + g' - 2y|, maximized at an endpoint of [0, 1].
      const double s = g + g2;
      return std::abs(g - g2) * std::max(std::abs(s), std::abs(2.0 - s));
    }
    case LossKind::absolute: return std::abs(g - g2);
    case LossKind::zero_one: return (g >= loss.threshold()) != (g2 >= loss.threshold()) ? 1.0 : 0.0;
    default: throw unsupported_error("pseudo_metric needs a finite observation space for " + loss.name() + " losses");
  }
}

// Upper bound on ||lambda||_BL = sup_y ||lambda(., y)||_BL.
//
// The Lipschitz part is measured against the native distance on Gamma. Since
// |lambda(g, y) - lambda(g', y)| <= rho(g, g') by definition, the Lipschitz
// constant of a nonconstant lambda(., y) with respect to rho is at most 1;
// taking max(native constant, 1) keeps the result an upper bound under
// either metric.
inline double bl_norm_bound(const LossFunction& loss) {
  const double lip = loss.lipschitz_constant();
  if (!std::isfinite(lip)) throw unsupported_error("bl_norm_bound needs a finite Lipschitz constant");
  if (lip == 0.0) return loss.bound();
  return std::max(lip, 1.0) + loss.bound();
}

// ||lambda||_BL with the Lipschitz part taken against rho itself: each
// lambda(., y) is 1-Lipschitz under rho, so 1 + L bounds it for every loss,
// including ones that are discontinuous on the native line.
inline double rho_bl_norm_bound(const LossFunction& loss) noexcept {
  return loss.bound() == 0.0 ? 0.0 : 1.0 + loss.bound();
}

}  // namespace waa
