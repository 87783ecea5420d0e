#pragma once

// Weak Aggregating Algorithm over an expert pool, plus the bound calculators
// and the auditor that re-derives the per-round inequalities from a run's
// history.
//
// Weights live in log-space: ln w_n^(k) = ln q_k - L_{n-1}^(k) / sqrt(n),
// i.e. beta_n = exp(-1/sqrt(n)). At every round change the log-weights are
// rebuilt from the stored cumulative losses rather than updated
// multiplicatively, since beta itself moves with n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <limits>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "waa/error.hpp"
#include "waa/experts.hpp"
#include "waa/losses.hpp"
#include "waa/measures.hpp"
#include "waa/numeric.hpp"

namespace waa {

struct WaaState {
  std::size_t round = 1;                   // next round to play
  std::vector<double> cumulative_losses;   // L_{n-1}^(k)
  std::vector<double> log_weights;         // ln w_n^(k)
  double log_normalizer = 0.0;             // ln sum_k w_n^(k)
  double cumulative_learner_loss = 0.0;    // L_{n-1}
};

// ln w_n^(k) recomputed from scratch.
inline std::vector<double> log_weights_from_scratch(std::span<const double> log_priors,
                                                    std::span<const double> cumulative_losses, std::size_t n) {
  const double root = std::sqrt(static_cast<double>(n));
  std::vector<double> out(log_priors.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = log_priors[k] - cumulative_losses[k] / root;
  return out;
}

// p_n^(k) via log-sum-exp.
inline std::vector<double> normalized_weights(const WaaState& state) {
  std::vector<double> p(state.log_weights.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(state.log_weights[k] - state.log_normalizer);
  return p;
}

template <class Value>
struct Forecast {
  std::size_t round;
  Value value;
};

template <class Value>
struct RoundRecord {
  std::size_t n = 0;
  Signal x;
  Value prediction{};
  double y = 0.0;
  double learner_loss = 0.0;
  std::vector<std::size_t> cells;       // phi cell of x at each pool level
  std::vector<double> palette_losses;   // lambda(palette_j, y); empty when not retained
  double mixture_loss = 0.0;            // sum_k p_n^(k) l_n^(k)
  double weight_entropy = 0.0;          // -sum_k p ln p
};

template <class Value>
class WeakAggregatingAlgorithm {
 public:
  WeakAggregatingAlgorithm(std::shared_ptr<const ExpertPool<Value>> pool, LossFunction loss,
                           bool retain_expert_losses = true)
      : pool_(std::move(pool)), loss_(std::move(loss)), retain_(retain_expert_losses) {
    if (!pool_) throw invalid_argument_error("engine needs a pool");
    if constexpr (std::is_same_v<Value, double>) {
      if (!loss_.is_convex())
        throw contract_error("the deterministic engine needs a convex loss; " + loss_.name() +
                             " is not convex, use the randomized engine");
    }
    state_.cumulative_losses.assign(pool_->size(), 0.0);
    rebase();
  }

  const WaaState& state() const noexcept { return state_; }
  const ExpertPool<Value>& pool() const noexcept { return *pool_; }
  const LossFunction& loss() const noexcept { return loss_; }

  std::vector<double> normalized_weights() const { return waa::normalized_weights(state_); }

  // gamma_n = sum_k p_n^(k) D_k(x): a convex combination of points, or the
  // mixture of the experts' measures.
  Forecast<Value> predict(const Signal& x) {
    const auto cells = pool_->cells(x);
    const auto& palette = pool_->palette();
    std::vector<double> bucket(palette.size(), 0.0);
    for (std::size_t k = 0; k < weights_.size(); ++k)
      bucket[pool_->entry(k, cells[pool_->level_slot(k)])] += weights_[k];

    Value value = ValueTraits<Value>::combine(bucket, palette);
    if constexpr (std::is_same_v<Value, double>) {
      // Rounding may push the mixture a hair past the palette's hull.
      const auto [lo, hi] = std::minmax_element(palette.begin(), palette.end());
      value = std::clamp(value, *lo, *hi);
    }
    pending_x_ = x;
    pending_cells_ = cells;
    return {state_.round, std::move(value)};
  }

  RoundRecord<Value> update(const Signal& x, const Forecast<Value>& forecast, double y) {
    if (!pending_x_) throw sequencing_error("update without a prediction for round " + std::to_string(state_.round));
    if (forecast.round != state_.round)
      throw sequencing_error("forecast for round " + std::to_string(forecast.round) + " applied at round " +
                             std::to_string(state_.round));
    if (x != *pending_x_) throw sequencing_error("signal differs from the one predicted on");

    const auto& palette = pool_->palette();
    std::vector<double> palette_losses(palette.size());
    for (std::size_t j = 0; j < palette.size(); ++j) palette_losses[j] = ValueTraits<Value>::loss(loss_, palette[j], y);

    RoundRecord<Value> rec;
    rec.n = state_.round;
    rec.x = x;
    rec.prediction = forecast.value;
    rec.y = y;
    rec.learner_loss = ValueTraits<Value>::loss(loss_, forecast.value, y);

    double mixture = 0.0;
    double entropy = 0.0;
    for (std::size_t k = 0; k < pool_->size(); ++k) {
      const double l = palette_losses[pool_->entry(k, pending_cells_[pool_->level_slot(k)])];
      mixture += weights_[k] * l;
      if (weights_[k] > 0.0) entropy -= weights_[k] * (state_.log_weights[k] - state_.log_normalizer);
      state_.cumulative_losses[k] += l;
    }
    rec.mixture_loss = mixture;
    rec.weight_entropy = entropy;
    rec.cells = std::move(pending_cells_);
    if (retain_) rec.palette_losses = std::move(palette_losses);

    state_.cumulative_learner_loss += rec.learner_loss;
    ++state_.round;
    rebase();
    pending_x_.reset();
    return rec;
  }

 private:
  // Weights are rebuilt from the priors and cumulative losses every round, so
  // no multiplicative drift accumulates.
  void rebase() {
    state_.log_weights = log_weights_from_scratch(pool_->log_priors(), state_.cumulative_losses, state_.round);
    weights_.resize(state_.log_weights.size());
    state_.log_normalizer = softmax(state_.log_weights, weights_);
  }

  std::shared_ptr<const ExpertPool<Value>> pool_;
  LossFunction loss_;
  bool retain_;
  WaaState state_;
  std::vector<double> weights_;
  std::optional<Signal> pending_x_;
  std::vector<std::size_t> pending_cells_;
};

using DeterministicEngine = WeakAggregatingAlgorithm<double>;
using RandomizedEngine = WeakAggregatingAlgorithm<FiniteMeasure>;

// (L^2 e^L + ln(1/q_K)) sqrt(N).
inline double lemma5_bound(double loss_bound, double prior, double rounds) {
  if (!(prior > 0.0)) throw invalid_argument_error("lemma5_bound needs a positive prior");
  if (loss_bound < 0.0 || rounds < 0.0) throw invalid_argument_error("lemma5_bound needs L >= 0 and N >= 0");
  return (loss_bound * loss_bound * std::exp(loss_bound) - std::log(prior)) * std::sqrt(rounds);
}

// Same bound from ln q_K, for priors too small to exponentiate.
inline double lemma5_bound_from_log_prior(double loss_bound, double log_prior, double rounds) {
  return (loss_bound * loss_bound * std::exp(loss_bound) - log_prior) * std::sqrt(rounds);
}

// Both sides of (sum_k q_k x^{L_k})^a >= sum_k q_k x^{a L_k} in log form,
// for x in (0, 1), a in (0, 1] and sum q_k <= 1.
struct MeanComparison {
  double log_lhs;
  double log_rhs;
  bool holds(double relative_tolerance = 1e-12) const { return log_lhs >= log_rhs + std::log1p(-relative_tolerance); }
};

inline MeanComparison mean_comparison(std::span<const double> log_priors, std::span<const double> losses, double base,
                                      double exponent) {
  if (log_priors.size() != losses.size()) throw invalid_argument_error("mean_comparison: length mismatch");
  if (!(base > 0.0 && base < 1.0)) throw invalid_argument_error("mean_comparison: base must lie in (0, 1)");
  const double log_base = std::log(base);
  std::vector<double> lhs(losses.size()), rhs(losses.size());
  for (std::size_t k = 0; k < losses.size(); ++k) {
    lhs[k] = log_priors[k] + losses[k] * log_base;
    rhs[k] = log_priors[k] + exponent * losses[k] * log_base;
  }
  return {exponent * log_sum_exp(lhs), log_sum_exp(rhs)};
}

// Per-round quantities re-derived from a history by the auditor. Index i
// holds the value after round N = i + 1.
struct RunAudit {
  std::vector<double> lemma9_gap;          // RHS of the mixture bound minus L_N
  std::vector<double> lemma5_excess;       // max_k (L_N - L_N^(k) - bound_k(N)); <= 0 when the bound holds
  std::vector<std::size_t> lemma5_worst;   // 1-based expert attaining that max
  std::vector<double> convexity_slack;     // sum_k p_n^(k) l_n^(k) - l_n
  std::vector<double> expert_cumulative;   // L_N^(k) at the end of the history

  double min_lemma9_gap() const { return lemma9_gap.empty() ? 0.0 : *std::min_element(lemma9_gap.begin(), lemma9_gap.end()); }
  double max_lemma5_excess() const {
    return lemma5_excess.empty() ? -std::numeric_limits<double>::infinity() : *std::max_element(lemma5_excess.begin(), lemma5_excess.end());
  }
  double min_convexity_slack() const {
    return convexity_slack.empty() ? 0.0 : *std::min_element(convexity_slack.begin(), convexity_slack.end());
  }
  double max_abs_convexity_slack() const {
    double m = 0.0;
    for (double v : convexity_slack) m = std::max(m, std::abs(v));
    return m;
  }
};

// Recomputes weights, expert losses and the learner's loss from the raw
// history, independently of the engine's incremental state. Terms are kept
// centered so that exact ties (e.g. a single-expert pool) produce exact zeros:
//   A_n - B_n = sqrt(n) ln sum_k p_k exp(-(l_k - A_n)/sqrt(n)),
//   C_N - L_N = -sqrt(N) ln sum_k q_k exp(-(L_N^(k) - L_N)/sqrt(N)),
// where A_n = sum_k p_k l_k and B_n = log_{beta_n} sum_k p_k beta_n^{l_k}.
template <class Value>
RunAudit audit_history(std::span<const RoundRecord<Value>> history, const ExpertPool<Value>& pool,
                       const LossFunction& loss) {
  const std::size_t size = pool.size();
  const auto& lq = pool.log_priors();
  const double bound = loss.bound();
  const double bound_term = bound * bound * std::exp(bound);

  RunAudit audit;
  std::vector<double> cumulative(size, 0.0), lw(size), p(size), expert_loss(size), scratch(size);
  double learner = 0.0;
  double mean_gap_sum = 0.0;

  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& rec = history[i];
    const std::size_t n = i + 1;
    if (rec.n != n) throw insufficient_data_error("history is not contiguous from round 1");
    if (rec.palette_losses.size() != pool.palette().size() || rec.cells.size() != pool.levels().size())
      throw insufficient_data_error("history lacks per-expert losses at round " + std::to_string(n));
    const double root = std::sqrt(static_cast<double>(n));

    for (std::size_t k = 0; k < size; ++k) {
      lw[k] = lq[k] - cumulative[k] / root;
      expert_loss[k] = rec.palette_losses[pool.entry(k, rec.cells[pool.level_slot(k)])];
    }
    const double norm = softmax(lw, p);
    double mean = 0.0;
    for (std::size_t k = 0; k < size; ++k) mean += p[k] * expert_loss[k];
    for (std::size_t k = 0; k < size; ++k) scratch[k] = (lw[k] - norm) - (expert_loss[k] - mean) / root;
    mean_gap_sum += root * log_sum_exp(scratch);

    const double l = ValueTraits<Value>::loss(loss, rec.prediction, rec.y);
    learner += l;
    audit.convexity_slack.push_back(mean - l);

    double excess = -std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    for (std::size_t k = 0; k < size; ++k) {
      cumulative[k] += expert_loss[k];
      scratch[k] = lq[k] - (cumulative[k] - learner) / root;
      const double e = learner - cumulative[k] - (bound_term - lq[k]) * root;
      if (e > excess) {
        excess = e;
        worst = k + 1;
      }
    }
    audit.lemma9_gap.push_back(mean_gap_sum - root * log_sum_exp(scratch));
    audit.lemma5_excess.push_back(excess);
    audit.lemma5_worst.push_back(worst);
  }
  audit.expert_cumulative = std::move(cumulative);
  return audit;
}

template <class Value>
std::vector<double> lemma9_gap(std::span<const RoundRecord<Value>> history, const ExpertPool<Value>& pool,
                               const LossFunction& loss) {
  return audit_history(history, pool, loss).lemma9_gap;
}

}  // namespace waa
