#pragma once

// Finite-support probability measures on the prediction space: expected loss,
// mixtures, sampling and the Fortet-Mourier (bounded-Lipschitz) distance.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "waa/detail/simplex.hpp"
#include "waa/error.hpp"
#include "waa/losses.hpp"
#include "waa/numeric.hpp"

namespace waa {

struct Atom {
  double point;
  double mass;
  friend bool operator==(const Atom&, const Atom&) = default;
};

class FiniteMeasure {
 public:
  static constexpr double merge_tolerance = 1e-12;
  static constexpr double mass_tolerance = 1e-12;

  FiniteMeasure() = default;

  // Sorts, merges points within merge_tolerance and drops zero masses. Total
  // mass must be 1 within mass_tolerance.
  static FiniteMeasure from_atoms(std::vector<Atom> atoms) {
    FiniteMeasure m = canonical(std::move(atoms));
    double total = 0.0;
    for (const auto& a : m.atoms_) total += a.mass;
    if (m.atoms_.empty() || std::abs(total - 1.0) > mass_tolerance)
      throw invalid_argument_error("measure masses sum to " + format_double(total) + ", not 1");
    return m;
  }

  static FiniteMeasure point_mass(double g) { return from_atoms({{g, 1.0}}); }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double total_mass() const noexcept {
    double total = 0.0;
    for (const auto& a : atoms_) total += a.mass;
    return total;
  }

  double mean() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.mass * a.point;
    return m;
  }

  // "p1:m1;p2:m2;..." in canonical order.
  std::string repr() const {
    std::string out;
    for (const auto& a : atoms_) {
      if (!out.empty()) out += ';';
      out += format_double(a.point) + ':' + format_double(a.mass);
    }
    return out;
  }

  friend bool operator==(const FiniteMeasure&, const FiniteMeasure&) = default;

  // Canonical form without the unit-mass check; used for mixtures.
  static FiniteMeasure canonical(std::vector<Atom> atoms) {
    for (const auto& a : atoms)
      if (!std::isfinite(a.point) || !(a.mass >= 0.0)) throw invalid_argument_error("invalid atom");
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.point < r.point; });
    FiniteMeasure m;
    for (const auto& a : atoms) {
      if (a.mass == 0.0) continue;
      if (!m.atoms_.empty() && a.point - m.atoms_.back().point <= merge_tolerance)
        m.atoms_.back().mass += a.mass;
      else
        m.atoms_.push_back(a);
    }
    return m;
  }

 private:
  std::vector<Atom> atoms_;
};

inline FiniteMeasure lift(double g) { return FiniteMeasure::point_mass(g); }

// Integral of lambda(., y) against mu.
inline double expected_loss(const FiniteMeasure& mu, const LossFunction& loss, double y) {
  double total = 0.0;
  for (const auto& a : mu.atoms()) total += a.mass * loss.evaluate(a.point, y);
  return total;
}

// sum_i weights[i] * measures[i], coinciding atoms merged. Zero weights are
// allowed; the weights must sum to 1 within the mass tolerance.
inline FiniteMeasure mix(std::span<const double> weights, std::span<const FiniteMeasure> measures) {
  if (weights.size() != measures.size()) throw invalid_argument_error("mix: weights and measures differ in length");
  std::vector<Atom> atoms;
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw invalid_argument_error("mix: negative weight");
    total += weights[i];
    if (weights[i] == 0.0) continue;
    for (const auto& a : measures[i].atoms()) atoms.push_back({a.point, weights[i] * a.mass});
  }
  if (std::abs(total - 1.0) > FiniteMeasure::mass_tolerance)
    throw invalid_argument_error("mix: weights sum to " + format_double(total) + ", not 1");
  return FiniteMeasure::canonical(std::move(atoms));
}

// Inverse-CDF draw over the canonical atom order.
inline double sample(const FiniteMeasure& mu, Rng& rng) {
  const auto& atoms = mu.atoms();
  if (atoms.empty()) throw invalid_argument_error("sample from an empty measure");
  const double u = uniform01(rng) * mu.total_mass();
  double cumulative = 0.0;
  for (const auto& a : atoms) {
    cumulative += a.mass;
    if (u < cumulative) return a.point;
  }
  return atoms.back().point;
}

// Fortet-Mourier distance sup { |int f d(mu - nu)| : ||f||_BL <= 1 }, with the
// BL norm taken over (Gamma, rho). On the union support {g_i} it is the LP
//   max sum_i (mu_i - nu_i) f_i
//   s.t. |f_i| <= s, f_i - f_j <= c rho(g_i, g_j), c + s <= 1, c, s >= 0,
// solved after substituting h_i = f_i + s >= 0 so the origin is feasible.
inline double fm_distance(const FiniteMeasure& mu, const FiniteMeasure& nu, const LossFunction& loss) {
  std::vector<double> points;
  for (const auto& a : mu.atoms()) points.push_back(a.point);
  for (const auto& a : nu.atoms()) points.push_back(a.point);
  std::sort(points.begin(), points.end());
  std::vector<double> support;
  for (double p : points)
    if (support.empty() || p - support.back() > FiniteMeasure::merge_tolerance) support.push_back(p);

  const std::size_t n = support.size();
  std::vector<double> w(n, 0.0);
  auto slot = [&](double p) {
    return static_cast<std::size_t>(std::lower_bound(support.begin(), support.end(), p - FiniteMeasure::merge_tolerance) -
                                    support.begin());
  };
  for (const auto& a : mu.atoms()) w[slot(a.point)] += a.mass;
  for (const auto& a : nu.atoms()) w[slot(a.point)] -= a.mass;

  std::vector<double> rho(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) rho[i * n + j] = rho[j * n + i] = pseudo_metric(loss, support[i], support[j]);

  // Columns: h_0..h_{n-1}, c, s.
  const std::size_t col_c = n, col_s = n + 1;
  const std::size_t rows = n + n * (n - 1) + 1;
  detail::DenseLp lp(rows, n + 2);
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i, ++r) {
    lp.a(r, i) = 1.0;  // h_i <= 2s
    lp.a(r, col_s) = -2.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      lp.a(r, i) = 1.0;
      lp.a(r, j) = -1.0;
      lp.a(r, col_c) = -rho[i * n + j];
      ++r;
    }
  lp.a(r, col_c) = 1.0;
  lp.a(r, col_s) = 1.0;
  lp.b(r) = 1.0;

  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lp.c(i) = w[i];
    wsum += w[i];
  }
  lp.c(col_s) = -wsum;
  const double value = lp.maximize().value;
  return std::max(0.0, value);
}

}  // namespace waa
