#ifndef ADALVR_VERIFY_HPP
#define ADALVR_VERIFY_HPP

#include "adalvr/core.hpp"
#include "adalvr/estimators.hpp"
#include "adalvr/optimizer.hpp"
#include "adalvr/problem.hpp"
#include "adalvr/scaling.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace adalvr {

inline constexpr double kLemmaTolerance = 1e-9;

/// One evaluated inequality lhs <= rhs.
struct LemmaReport {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool pass = false;
  std::string context;
};

inline LemmaReport make_report(std::string id, double lhs, double rhs, std::string context = {},
                               double tolerance = kLemmaTolerance) {
  LemmaReport r;
  r.id = std::move(id);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.pass = std::isfinite(r.slack) && r.slack >= -tolerance * (1.0 + std::abs(rhs));
  r.context = std::move(context);
  return r;
}

namespace detail {

inline void require_history(const RunTrace& trace) {
  if (!trace.has_history())
    throw std::invalid_argument("lemma check needs a trace recorded with full history");
  if (trace.estimates.size() + 1 != trace.iterates.size() ||
      trace.roots.size() != trace.estimates.size())
    throw std::invalid_argument("inconsistent trace history lengths");
}

inline double alpha_for(const RunTrace& trace) {
  if (!is_adagrad(trace.scaling))
    throw std::invalid_argument("lemma bounds apply to the AdaGrad scalings only");
  return trace.scaling == ScalingKind::adagrad_norm
             ? 1.0
             : std::sqrt(static_cast<double>(trace.dimension));
}

inline std::string span_context(const RunTrace& trace) {
  return std::string(to_string(trace.estimator)) + "+" + to_string(trace.scaling) +
         " t=1.." + std::to_string(trace.estimates.size());
}

}  // namespace detail

/// sum_t <g_t, x_t - x_ref> <= alpha (eta + D^2 / (2 eta)) sqrt(sum_t ||g_t||^2).
inline LemmaReport check_regret_bound(const RunTrace& trace, const Domain& domain, double eta,
                                      const Vector& x_ref) {
  detail::require_history(trace);
  if (!domain.bounded()) throw std::invalid_argument("regret bound needs a bounded domain");
  const double alpha = detail::alpha_for(trace);
  const double D = domain.diameter();
  CompensatedSum lhs;
  CompensatedSum sq;
  for (std::size_t t = 0; t < trace.estimates.size(); ++t) {
    lhs += trace.estimates[t].dot(trace.iterates[t] - x_ref);
    sq += trace.estimates[t].squaredNorm();
  }
  const double rhs = alpha * (eta + D * D / (2.0 * eta)) * std::sqrt(sq.value());
  return make_report("regret_bound", lhs.value(), rhs, detail::span_context(trace));
}

/// Both trace inequalities, from the recorded A_t:
///   [0] sum_t <g_t, A_t^+ g_t> <= 2 Tr(A_T)
///   [1] Tr(A_T) <= alpha sqrt(sum_t ||g_t||^2)
inline std::vector<LemmaReport> check_trace_bounds(const RunTrace& trace) {
  detail::require_history(trace);
  const double alpha = detail::alpha_for(trace);
  CompensatedSum weighted;
  CompensatedSum sq;
  for (std::size_t t = 0; t < trace.estimates.size(); ++t) {
    const Vector& g = trace.estimates[t];
    weighted += g.dot(ScalingState::pseudo_inverse_apply(trace.roots[t], g));
    sq += g.squaredNorm();
  }
  const double tr = trace.roots.empty() ? 0.0 : trace.roots.back().sum();
  const std::string ctx = detail::span_context(trace);
  return {make_report("trace_bound_weighted", weighted.value(), 2.0 * tr, ctx),
          make_report("trace_bound_alpha", tr, alpha * std::sqrt(sq.value()), ctx)};
}

/// sum_t ||x_t - x_ref||^2_{A_t - A_{t-1}} <= D^2 Tr(A_T), with A_0 = 0.
/// `diameter` overrides the domain's diameter (negative controls).
inline LemmaReport check_weighted_distance(const RunTrace& trace, const Domain& domain,
                                           const Vector& x_ref,
                                           std::optional<double> diameter = std::nullopt) {
  detail::require_history(trace);
  if (!domain.bounded()) throw std::invalid_argument("weighted distance needs a bounded domain");
  const double D = diameter.value_or(domain.diameter());
  CompensatedSum lhs;
  std::string context = detail::span_context(trace);
  for (std::size_t t = 0; t < trace.roots.size(); ++t) {
    const Vector& a = trace.roots[t];
    const Vector step = t == 0 ? a : Vector(a - trace.roots[t - 1]);
    lhs += mahalanobis_norm_sq(step, trace.iterates[t] - x_ref);
    if (!domain.contains(trace.iterates[t])) context += " [iterate outside domain]";
  }
  const double tr = trace.roots.empty() ? 0.0 : trace.roots.back().sum();
  return make_report("weighted_distance", lhs.value(), D * D * tr, context);
}

/// ||grad f(x)||^2 <= 2 L-hat (f(x) - f*), the squared form of the
/// gradient/suboptimality corollary.
inline LemmaReport check_grad_subopt(const FiniteSumProblem& problem, const Vector& x,
                                     double f_star) {
  const double lhs = problem.full_grad(x).squaredNorm();
  const double rhs = 2.0 * problem.smoothness_upper_bound() * (problem.value(x) - f_star);
  return make_report("grad_subopt", lhs, rhs);
}

/// Bregman form of smoothness: ||grad f_i(x) - grad f_i(y)||^2 / (2 L) <= D_{f_i}(y, x).
inline LemmaReport check_bregman_smoothness(const FiniteSumProblem& problem, std::size_t i,
                                            const Vector& y, const Vector& x) {
  const double L = problem.smoothness_upper_bound();
  const double lhs =
      (problem.component_grad(i, x) - problem.component_grad(i, y)).squaredNorm() / (2.0 * L);
  const double rhs = problem.bregman_divergence(i, y, x);
  return make_report("bregman_smoothness", lhs, rhs, "component " + std::to_string(i));
}

/// Variance decomposition at a fixed estimator state, by enumeration:
/// E||g||^2 <= 2 E||grad f_i(x) - grad f_i(x*)||^2 + 2 E||grad f_i(y_i) - grad f_i(x*)||^2
/// where y_i is the memory point of component i.
inline LemmaReport check_variance_decomposition(const FiniteSumProblem& problem,
                                                const Estimator& estimator, const Vector& x,
                                                const Vector& x_star) {
  const std::size_t n = problem.components();
  CompensatedSum fresh;
  CompensatedSum stale;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector gs = problem.component_grad(i, x_star);
    fresh += (problem.component_grad(i, x) - gs).squaredNorm();
    stale += (problem.component_grad(i, estimator.memory_point(i)) - gs).squaredNorm();
  }
  const double nd = static_cast<double>(n);
  const double lhs = estimator.variance(x).second_moment;
  return make_report("variance_decomposition", lhs, 2.0 * fresh.value() / nd + 2.0 * stale.value() / nd);
}

/// Largest x with x^2 <= a (x + b) is at most a + sqrt(a b).
inline double quad_root_bound(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw std::invalid_argument("quad_root_bound needs a, b >= 0");
  return a + std::sqrt(a * b);
}

/// Right-hand side of the AdaLVR expected-suboptimality rate at horizon T.
inline double adalvr_rate_bound(double alpha, double eta, double diameter, double smoothness,
                                std::size_t n, double initial_gap, std::size_t T) {
  const double c = alpha * (eta + diameter * diameter / (2.0 * eta));
  return (c * std::sqrt(4.0 * smoothness * static_cast<double>(n) * initial_gap) +
          8.0 * smoothness * c * c) /
         static_cast<double>(T);
}

/// Right-hand side of the telescoping bound on the expected sum of ||g_t||^2.
inline double telescoping_bound(double smoothness, double mean_gap_sum, std::size_t n,
                                double initial_gap) {
  return 8.0 * smoothness * mean_gap_sum +
         4.0 * smoothness * static_cast<double>(n) * initial_gap;
}

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

inline SampleStats sample_stats(const std::vector<double>& xs) {
  SampleStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  CompensatedSum sum;
  for (double x : xs) sum += x;
  s.mean = sum.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum ss;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    const double var = ss.value() / static_cast<double>(xs.size() - 1);
    s.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return s;
}

}  // namespace adalvr

#endif  // ADALVR_VERIFY_HPP
