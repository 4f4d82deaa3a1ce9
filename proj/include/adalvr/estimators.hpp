#ifndef ADALVR_ESTIMATORS_HPP
#define ADALVR_ESTIMATORS_HPP

#include "adalvr/core.hpp"
#include "adalvr/problem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adalvr {

enum class EstimatorKind { sgd, full_batch, saga, lsvrg };

inline const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::sgd: return "sgd";
    case EstimatorKind::full_batch: return "full";
    case EstimatorKind::saga: return "saga";
    case EstimatorKind::lsvrg: return "lsvrg";
  }
  return "?";
}

/// Second moments of an estimate at a fixed state, by enumeration.
struct VarianceReport {
  double variance = 0.0;       // E ||g - grad f(x)||^2
  double second_moment = 0.0;  // E ||g||^2
};

/// Stochastic gradient estimator over a FiniteSumProblem.
///
/// SAGA keeps one stored gradient per component plus their running mean;
/// L-SVRG keeps an anchor point and its full gradient, refreshed with
/// probability p after each estimate. Each step draws the index first and
/// (L-SVRG only) the refresh coin second, from a counter-based generator.
///
/// gradient_count() counts fresh component-gradient evaluations: SAGA 1 per
/// step, L-SVRG 2 per step plus n per refresh, SGD 1, full batch n.
/// Initialization of SAGA and L-SVRG costs n.
///
/// The problem must outlive the estimator.
class Estimator {
 public:
  Estimator() = default;

  Estimator(EstimatorKind kind, const FiniteSumProblem& problem, const Vector& x1, double p,
            std::uint64_t seed, bool retain_points = false)
      : kind_(kind), problem_(&problem), p_(p), rng_(seed), retain_points_(retain_points) {
    if (static_cast<std::size_t>(x1.size()) != problem.dimension())
      throw std::invalid_argument("initial point has the wrong dimension");
    if (kind == EstimatorKind::lsvrg && !(p > 0.0 && p < 1.0))
      throw std::invalid_argument("L-SVRG refresh probability must lie in (0, 1)");
    const std::size_t n = problem.components();
    const auto d = static_cast<Eigen::Index>(problem.dimension());
    if (kind == EstimatorKind::saga) {
      table_.resize(static_cast<Eigen::Index>(n), d);
      Vector g;
      Vector sum = Vector::Zero(d);
      for (std::size_t i = 0; i < n; ++i) {
        problem.component_grad(i, x1, g);
        table_.row(static_cast<Eigen::Index>(i)) = g.transpose();
        sum += g;
      }
      mean_ = sum / static_cast<double>(n);
      mean_comp_ = Vector::Zero(d);
      if (retain_points_) points_.assign(n, x1);
      count_ += n;
    } else if (kind == EstimatorKind::lsvrg) {
      anchor_ = x1;
      anchor_grad_ = problem.full_grad(x1);
      count_ += n;
    }
  }

  bool initialized() const { return problem_ != nullptr; }
  EstimatorKind kind() const { return kind_; }
  double refresh_probability() const { return p_; }
  std::uint64_t gradient_count() const { return count_; }
  std::uint64_t refresh_count() const { return refreshes_; }
  std::size_t last_index() const { return last_index_; }
  bool last_refreshed() const { return last_refreshed_; }

  /// g^(t) at x; updates the estimator memory afterwards.
  const Vector& estimate(const Vector& x) {
    if (!initialized()) throw StateError("estimator used before initialization");
    const FiniteSumProblem& prob = *problem_;
    const std::size_t n = prob.components();
    last_refreshed_ = false;
    switch (kind_) {
      case EstimatorKind::full_batch:
        estimate_ = prob.full_grad(x);
        count_ += n;
        break;
      case EstimatorKind::sgd:
        last_index_ = static_cast<std::size_t>(rng_.uniform_index(n));
        prob.component_grad(last_index_, x, estimate_);
        count_ += 1;
        break;
      case EstimatorKind::saga: {
        last_index_ = static_cast<std::size_t>(rng_.uniform_index(n));
        prob.component_grad(last_index_, x, fresh_);
        auto stored = table_.row(static_cast<Eigen::Index>(last_index_));
        estimate_ = fresh_ - stored.transpose() + mean_;
        // Kahan-compensated running mean of the table rows.
        const Vector delta = (fresh_ - stored.transpose()) / static_cast<double>(n);
        const Vector y = delta - mean_comp_;
        const Vector t = mean_ + y;
        mean_comp_ = (t - mean_) - y;
        mean_ = t;
        stored = fresh_.transpose();
        if (retain_points_) points_[last_index_] = x;
        count_ += 1;
        break;
      }
      case EstimatorKind::lsvrg: {
        last_index_ = static_cast<std::size_t>(rng_.uniform_index(n));
        prob.component_grad(last_index_, x, fresh_);
        prob.component_grad(last_index_, anchor_, stale_);
        estimate_ = fresh_ - stale_ + anchor_grad_;
        count_ += 2;
        if (rng_.bernoulli(p_)) {
          anchor_ = x;
          anchor_grad_ = prob.full_grad(x);
          count_ += n;
          ++refreshes_;
          last_refreshed_ = true;
        }
        break;
      }
    }
    return estimate_;
  }

  /// Mean of the estimate over all n equally likely index draws, memory
  /// untouched. Test oracle for unbiasedness.
  Vector exact_expectation(const Vector& x) const {
    Vector sum = Vector::Zero(x.size());
    enumerate(x, [&](const Vector& g) { sum += g; });
    return sum / static_cast<double>(problem_->components());
  }

  VarianceReport variance(const Vector& x) const {
    const Vector full = problem_->full_grad(x);
    CompensatedSum var;
    CompensatedSum second;
    enumerate(x, [&](const Vector& g) {
      var += (g - full).squaredNorm();
      second += g.squaredNorm();
    });
    const double n = static_cast<double>(problem_->components());
    return {var.value() / n, second.value() / n};
  }

  // Memory inspection.
  const Matrix& table() const { return table_; }
  const Vector& table_mean() const { return mean_; }
  Vector recomputed_table_mean() const {
    Vector sum = Vector::Zero(table_.cols());
    for (Eigen::Index r = 0; r < table_.rows(); ++r) sum += table_.row(r).transpose();
    return sum / static_cast<double>(table_.rows());
  }
  const Vector& anchor() const { return anchor_; }
  const Vector& anchor_grad() const { return anchor_grad_; }
  /// Point at which component i was last evaluated (SAGA with retained
  /// points) or the anchor (L-SVRG).
  const Vector& memory_point(std::size_t i) const {
    if (kind_ == EstimatorKind::lsvrg) return anchor_;
    if (kind_ != EstimatorKind::saga || !retain_points_)
      throw StateError("memory points are only kept for SAGA with retain_points");
    return points_.at(i);
  }

  static constexpr std::size_t kEnumerationLimit = 10000;

 private:
  template <typename Visit>
  void enumerate(const Vector& x, Visit&& visit) const {
    if (!initialized()) throw StateError("estimator used before initialization");
    const FiniteSumProblem& prob = *problem_;
    const std::size_t n = prob.components();
    if (n > kEnumerationLimit)
      throw CapacityError("enumeration needs n <= " + std::to_string(kEnumerationLimit));
    if (kind_ == EstimatorKind::full_batch) {
      const Vector full = prob.full_grad(x);
      for (std::size_t i = 0; i < n; ++i) visit(full);
      return;
    }
    Vector fresh;
    Vector stale;
    Vector g;
    for (std::size_t i = 0; i < n; ++i) {
      prob.component_grad(i, x, fresh);
      switch (kind_) {
        case EstimatorKind::sgd:
          g = fresh;
          break;
        case EstimatorKind::saga:
          g = fresh - table_.row(static_cast<Eigen::Index>(i)).transpose() + mean_;
          break;
        case EstimatorKind::lsvrg:
          prob.component_grad(i, anchor_, stale);
          g = fresh - stale + anchor_grad_;
          break;
        case EstimatorKind::full_batch:
          break;
      }
      visit(g);
    }
  }

  EstimatorKind kind_ = EstimatorKind::sgd;
  const FiniteSumProblem* problem_ = nullptr;
  double p_ = 0.0;
  CounterRng rng_;
  bool retain_points_ = false;

  Matrix table_;
  Vector mean_;
  Vector mean_comp_;
  std::vector<Vector> points_;
  Vector anchor_;
  Vector anchor_grad_;

  Vector estimate_;
  Vector fresh_;
  Vector stale_;
  std::uint64_t count_ = 0;
  std::uint64_t refreshes_ = 0;
  std::size_t last_index_ = 0;
  bool last_refreshed_ = false;
};

}  // namespace adalvr

#endif  // ADALVR_ESTIMATORS_HPP
