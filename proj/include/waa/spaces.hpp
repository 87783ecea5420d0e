#pragma once

// Signal spaces and approximation structures.
//
// A signal is stored as a vector of coordinates. On the unit interval it has
// one coordinate, on UnitCube(d) it has d, and on a finite set it has one
// coordinate holding the label's index in the declared label list.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "waa/error.hpp"

namespace waa {

using Signal = std::vector<double>;

enum class SpaceKind { unit_interval, unit_cube, finite_set };

class SignalSpace {
 public:
  static SignalSpace unit_interval() { return SignalSpace(SpaceKind::unit_interval, 1, {}); }

  static SignalSpace unit_cube(std::size_t dimension) {
    if (dimension == 0) throw invalid_argument_error("unit cube dimension must be positive");
    return SignalSpace(SpaceKind::unit_cube, dimension, {});
  }

  static SignalSpace finite_set(std::vector<std::string> labels) {
    if (labels.empty()) throw invalid_argument_error("finite signal set needs at least one label");
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j]) throw invalid_argument_error("duplicate label '" + labels[i] + "'");
    return SignalSpace(SpaceKind::finite_set, 1, std::move(labels));
  }

  SpaceKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool contains(const Signal& x) const noexcept {
    if (x.size() != dimension_) return false;
    if (kind_ == SpaceKind::finite_set) {
      const double v = x[0];
      return v >= 0.0 && v < static_cast<double>(labels_.size()) && v == std::floor(v);
    }
    for (double c : x)
      if (!(c >= 0.0 && c <= 1.0)) return false;
    return true;
  }

  void require(const Signal& x) const {
    if (!contains(x)) throw domain_error("signal outside " + name());
  }

  // Sup-metric on the interval and cubes, discrete 0/1 metric on finite sets.
  double distance(const Signal& a, const Signal& b) const {
    require(a);
    require(b);
    if (kind_ == SpaceKind::finite_set) return a[0] == b[0] ? 0.0 : 1.0;
    double d = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  }

  Signal label_signal(const std::string& label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == label) return {static_cast<double>(i)};
    throw domain_error("unknown label '" + label + "'");
  }

  std::string name() const {
    switch (kind_) {
      case SpaceKind::unit_interval: return "unit_interval";
      case SpaceKind::unit_cube: return "unit_cube(" + std::to_string(dimension_) + ")";
      case SpaceKind::finite_set: return "finite_set(" + std::to_string(labels_.size()) + ")";
    }
    return {};
  }

  friend bool operator==(const SignalSpace&, const SignalSpace&) = default;

 private:
  SignalSpace(SpaceKind kind, std::size_t dimension, std::vector<std::string> labels)
      : kind_(kind), dimension_(dimension), labels_(std::move(labels)) {}

  SpaceKind kind_;
  std::size_t dimension_;
  std::vector<std::string> labels_;
};

// Family of idempotent quantizers phi_m, m = min_level()..max_level(), whose
// m-th member has exactly 2^m image points.
//
// Unit interval: keep the first m binary digits, with x = 1 clamped into the
// last cell. UnitCube(d): m bits split over the coordinates, floor(m/d) each
// and one extra bit for each of the first m mod d coordinates; requires
// m >= d. Finite set of n labels: cell floor(i 2^m / n), represented by its
// smallest label; requires 2^m <= n and reduces to the identity at 2^m = n.
class ApproximationStructure {
 public:
  static constexpr int hard_level_limit = 30;

  ApproximationStructure(SignalSpace space, int max_level) : space_(std::move(space)), max_level_(max_level) {
    if (max_level_ < min_level())
      throw invalid_argument_error("max level " + std::to_string(max_level_) + " below minimum level " +
                                   std::to_string(min_level()) + " for " + space_.name());
    if (max_level_ > supported_level_limit())
      throw invalid_argument_error("max level " + std::to_string(max_level_) + " exceeds the limit " +
                                   std::to_string(supported_level_limit()) + " for " + space_.name());
  }

  const SignalSpace& space() const noexcept { return space_; }
  int max_level() const noexcept { return max_level_; }

  int min_level() const noexcept {
    return space_.kind() == SpaceKind::unit_cube ? static_cast<int>(space_.dimension()) : 1;
  }

  int supported_level_limit() const noexcept {
    if (space_.kind() == SpaceKind::finite_set) {
      int m = 0;
      while ((std::size_t{1} << (m + 1)) <= space_.labels().size()) ++m;
      return m;
    }
    return hard_level_limit;
  }

  std::size_t image_size(int m) const {
    check_level(m);
    return std::size_t{1} << m;
  }

  // Bits given to each coordinate at level m (unit interval and cubes).
  std::vector<int> coordinate_bits(int m) const {
    check_level(m);
    if (space_.kind() == SpaceKind::finite_set) return {m};
    const int d = static_cast<int>(space_.dimension());
    std::vector<int> bits(d, m / d);
    for (int i = 0; i < m % d; ++i) ++bits[i];
    return bits;
  }

  // Position of phi_m(x) in the canonical image order.
  std::size_t cell_index(int m, const Signal& x) const {
    check_level(m);
    space_.require(x);
    if (space_.kind() == SpaceKind::finite_set) {
      const auto n = space_.labels().size();
      const auto i = static_cast<std::size_t>(x[0]);
      return (i << m) / n;
    }
    std::size_t index = 0;
    const auto bits = coordinate_bits(m);
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const std::size_t cells = std::size_t{1} << bits[i];
      auto c = static_cast<std::size_t>(std::floor(std::ldexp(x[i], bits[i])));
      if (c >= cells) c = cells - 1;
      index = (index << bits[i]) | c;
    }
    return index;
  }

  // The image point with the given canonical position.
  Signal representative(int m, std::size_t cell) const {
    if (cell >= image_size(m)) throw invalid_argument_error("cell index out of range");
    if (space_.kind() == SpaceKind::finite_set) {
      const auto n = space_.labels().size();
      const std::size_t cells = std::size_t{1} << m;
      return {static_cast<double>((cell * n + cells - 1) / cells)};
    }
    const auto bits = coordinate_bits(m);
    Signal x(bits.size());
    for (std::size_t i = bits.size(); i-- > 0;) {
      const std::size_t mask = (std::size_t{1} << bits[i]) - 1;
      x[i] = std::ldexp(static_cast<double>(cell & mask), -bits[i]);
      cell >>= bits[i];
    }
    return x;
  }

  Signal quantize(int m, const Signal& x) const { return representative(m, cell_index(m, x)); }

  // phi_m(X) in lexicographic coordinate order.
  std::vector<Signal> image(int m) const {
    const auto size = image_size(m);
    std::vector<Signal> out;
    out.reserve(size);
    for (std::size_t c = 0; c < size; ++c) out.push_back(representative(m, c));
    return out;
  }

  // Half the supremal cell diameter of this phi_m; an upper bound on the m-th
  // Kolmogorov diameter of the space.
  double half_max_cell_diameter(int m) const {
    check_level(m);
    if (space_.kind() == SpaceKind::finite_set)
      return (std::size_t{1} << m) < space_.labels().size() ? 0.5 : 0.0;
    const auto bits = coordinate_bits(m);
    const int fewest = *std::min_element(bits.begin(), bits.end());
    return std::ldexp(1.0, -fewest - 1);
  }

  void check_level(int m) const {
    if (m < min_level() || m > max_level_)
      throw invalid_argument_error("level " + std::to_string(m) + " outside [" + std::to_string(min_level()) +
                                   ", " + std::to_string(max_level_) + "]");
  }

  friend bool operator==(const ApproximationStructure&, const ApproximationStructure&) = default;

 private:
  SignalSpace space_;
  int max_level_;
};

}  // namespace waa
