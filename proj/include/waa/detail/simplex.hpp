#pragma once

// Dense dictionary simplex for  max c.x  s.t.  A x <= b, x >= 0, with b >= 0
// so the origin is feasible and no first phase is needed. Bland's rule keeps
// degenerate problems from cycling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "waa/error.hpp"

namespace waa::detail {

struct LpResult {
  double value = 0.0;
  std::vector<double> x;
};

class DenseLp {
 public:
  DenseLp(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0), b_(rows, 0.0), c_(cols, 0.0) {}

  double& a(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  double& b(std::size_t r) { return b_[r]; }
  double& c(std::size_t j) { return c_[j]; }

  LpResult maximize(double eps = 1e-12) {
    for (double v : b_)
      if (v < 0.0) throw invalid_argument_error("simplex needs b >= 0");
    // Dictionary: basic_i = b_i - sum_j a_ij nonbasic_j ; z = v + sum_j c_j nonbasic_j.
    std::vector<std::size_t> nonbasic(cols_), basic(rows_);
    for (std::size_t j = 0; j < cols_; ++j) nonbasic[j] = j;
    for (std::size_t i = 0; i < rows_; ++i) basic[i] = cols_ + i;
    double value = 0.0;

    for (std::size_t iter = 0;; ++iter) {
      if (iter > 100000) throw error("simplex iteration limit reached");
      // Entering: smallest variable id with positive reduced cost.
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j)
        if (c_[j] > eps && (enter == cols_ || nonbasic[j] < nonbasic[enter])) enter = j;
      if (enter == cols_) break;

      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_; ++i) {
        const double coef = a_[i * cols_ + enter];
        if (coef > eps) best_ratio = std::min(best_ratio, b_[i] / coef);
      }
      if (!std::isfinite(best_ratio)) throw error("linear program is unbounded");
      // Leaving: among (near-)minimal ratios, the smallest variable id.
      std::size_t leave = rows_;
      for (std::size_t i = 0; i < rows_; ++i) {
        const double coef = a_[i * cols_ + enter];
        if (coef <= eps || b_[i] / coef > best_ratio + eps) continue;
        if (leave == rows_ || basic[i] < basic[leave]) leave = i;
      }
      pivot(leave, enter, value);
      std::swap(basic[leave], nonbasic[enter]);
    }

    LpResult out;
    out.value = value;
    out.x.assign(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      if (basic[i] < cols_) out.x[basic[i]] = b_[i];
    return out;
  }

 private:
  void pivot(std::size_t r, std::size_t e, double& value) {
    double* row = &a_[r * cols_];
    const double p = row[e];
    // Solve row r for the entering variable; the leaving variable takes column e.
    for (std::size_t j = 0; j < cols_; ++j) row[j] = (j == e) ? 1.0 / p : row[j] / p;
    b_[r] /= p;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == r) continue;
      double* other = &a_[i * cols_];
      const double f = other[e];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) other[j] = (j == e) ? -f * row[j] : other[j] - f * row[j];
      b_[i] -= f * b_[r];
      if (b_[i] < 0.0 && b_[i] > -1e-14) b_[i] = 0.0;
    }
    const double f = c_[e];
    value += f * b_[r];
    for (std::size_t j = 0; j < cols_; ++j) c_[j] = (j == e) ? -f * row[j] : c_[j] - f * row[j];
  }

  std::size_t rows_, cols_;
  std::vector<double> a_, b_, c_;
};

}  // namespace waa::detail
