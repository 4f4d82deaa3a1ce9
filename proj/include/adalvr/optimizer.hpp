#ifndef ADALVR_OPTIMIZER_HPP
#define ADALVR_OPTIMIZER_HPP

#include "adalvr/core.hpp"
#include "adalvr/estimators.hpp"
#include "adalvr/problem.hpp"
#include "adalvr/scaling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace adalvr {

struct OptimizerConfig {
  EstimatorKind estimator = EstimatorKind::saga;
  ScalingKind scaling = ScalingKind::adagrad_diag;
  ScalingParams params;
  double eta = 1.0;
  std::optional<double> p;  // defaults to 1/n
  std::size_t iterations = 1;  // T: produces x^(1) .. x^(T)
  std::uint64_t seed = 0;
  Domain domain;
  bool project = false;
  std::size_t checkpoint_stride = 1;
  bool record_history = false;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("T must be >= 1");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be > 0");
    if (p && !(*p > 0.0 && *p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    if (checkpoint_stride < 1) throw std::invalid_argument("checkpoint stride must be >= 1");
    if (project && !domain.bounded())
      throw std::invalid_argument("projection requested on an unbounded domain");
  }

  double refresh_probability(std::size_t n) const {
    if (p) return *p;
    return n > 1 ? 1.0 / static_cast<double>(n) : 0.5;
  }
};

struct Checkpoint {
  std::size_t t = 1;
  std::uint64_t gradients = 0;
  double objective = 0.0;          // f(x^(t))
  double average_objective = 0.0;  // f(xbar_t)
  double grad_norm_sq = 0.0;       // ||g^(t-1)||^2, 0 at t = 1
  double trace = 0.0;              // Tr(A_(t-1)), 0 at t = 1
};

/// Record of one run. In history mode iterates holds x^(1..T), and
/// estimates / roots hold g^(t) and A_t (stored as in ScalingState::root)
/// for t = 1..T-1.
struct RunTrace {
  EstimatorKind estimator = EstimatorKind::saga;
  ScalingKind scaling = ScalingKind::adagrad_diag;
  double eta = 1.0;
  std::size_t dimension = 0;
  std::size_t components = 0;
  std::vector<Checkpoint> checkpoints;
  Vector average;
  Vector last;
  std::uint64_t gradients = 0;
  std::uint64_t refreshes = 0;
  std::size_t steps = 0;
  bool diverged = false;
  std::string message;

  bool has_history() const { return !iterates.empty(); }
  std::vector<Vector> iterates;
  std::vector<Vector> estimates;
  std::vector<Vector> roots;
};

/// AdaLVR stepper. Each step from x^(t): draw i(t), form g^(t) and update
/// the estimator memory, accumulate g^(t) into G_t, then
/// x^(t+1) = Pi(x^(t) - eta A_t^+ g^(t)) and update the running average.
class AdaLVR {
 public:
  AdaLVR(const OptimizerConfig& config, const FiniteSumProblem& problem, const Vector& x1)
      : config_(config), problem_(&problem) {
    config_.validate();
    if (static_cast<std::size_t>(x1.size()) != problem.dimension())
      throw std::invalid_argument("initial point has the wrong dimension");
    x_ = config_.project ? config_.domain.clip(x1) : x1;
    average_ = x_;
    scaling_ = ScalingState(config_.scaling, problem.dimension(), config_.params);
    estimator_ = Estimator(config_.estimator, problem, x_,
                           config_.refresh_probability(problem.components()), config_.seed);
  }

  /// Returns false (and leaves the state at the last finite iterate) if the
  /// step produced a non-finite value.
  bool step() {
    if (diverged_) return false;
    const Vector& g = estimator_.estimate(x_);
    if (!g.allFinite()) return fail("non-finite gradient estimate");
    last_g_ = g;
    scaling_.accumulate(g);
    Vector next = x_ - config_.eta * scaling_.precondition(g);
    if (config_.project) next = config_.domain.clip(next);
    if (!next.allFinite()) return fail("non-finite iterate");
    x_ = std::move(next);
    ++t_;
    average_ += (x_ - average_) / static_cast<double>(t_);
    return true;
  }

  std::size_t t() const { return t_; }
  const Vector& iterate() const { return x_; }
  const Vector& average() const { return average_; }
  const Estimator& estimator() const { return estimator_; }
  const ScalingState& scaling() const { return scaling_; }
  /// g^(t-1) of the latest step.
  const Vector& last_estimate() const { return last_g_; }
  bool diverged() const { return diverged_; }
  /// Marks the run diverged from outside (e.g. a non-finite objective).
  void mark_diverged(const std::string& why) { fail(why); }
  const std::string& message() const { return message_; }
  std::uint64_t gradients() const { return estimator_.gradient_count(); }
  const OptimizerConfig& config() const { return config_; }

 private:
  bool fail(const std::string& why) {
    diverged_ = true;
    message_ = why + " at t = " + std::to_string(t_);
    return false;
  }

  OptimizerConfig config_;
  const FiniteSumProblem* problem_;
  Vector x_;
  Vector average_;
  ScalingState scaling_;
  Estimator estimator_;
  Vector last_g_;
  std::size_t t_ = 1;
  bool diverged_ = false;
  std::string message_;
};

/// Runs T - 1 steps from x1. Checkpoints are taken at t = 1, every
/// `checkpoint_stride` steps, and at T. A non-finite value ends the run early
/// with `diverged` set; the trace keeps the last finite checkpoint.
inline RunTrace run(const OptimizerConfig& config, const FiniteSumProblem& problem,
                    const Vector& x1) {
  AdaLVR opt(config, problem, x1);
  RunTrace trace;
  trace.estimator = config.estimator;
  trace.scaling = config.scaling;
  trace.eta = config.eta;
  trace.dimension = problem.dimension();
  trace.components = problem.components();

  const std::size_t T = config.iterations;
  auto checkpoint = [&](double grad_norm_sq) {
    Checkpoint c;
    c.t = opt.t();
    c.gradients = opt.gradients();
    c.objective = problem.value(opt.iterate());
    c.average_objective = problem.value(opt.average());
    c.grad_norm_sq = grad_norm_sq;
    c.trace = c.t > 1 ? opt.scaling().trace() : 0.0;
    if (!std::isfinite(c.objective) || !std::isfinite(c.average_objective)) {
      opt.mark_diverged("non-finite objective at t = " + std::to_string(c.t));
      return;
    }
    trace.checkpoints.push_back(c);
  };

  if (config.record_history) {
    trace.iterates.reserve(T);
    trace.estimates.reserve(T - 1);
    trace.roots.reserve(T - 1);
    trace.iterates.push_back(opt.iterate());
  }
  checkpoint(0.0);
  while (opt.t() < T && !opt.diverged()) {
    if (!opt.step()) break;
    if (config.record_history) {
      trace.iterates.push_back(opt.iterate());
      trace.estimates.push_back(opt.last_estimate());
      trace.roots.push_back(opt.scaling().root());
    }
    if ((opt.t() - 1) % config.checkpoint_stride == 0 || opt.t() == T)
      checkpoint(opt.last_estimate().squaredNorm());
  }

  trace.average = opt.average();
  trace.last = opt.iterate();
  trace.gradients = opt.gradients();
  trace.refreshes = opt.estimator().refresh_count();
  trace.steps = opt.t() - 1;
  trace.diverged = opt.diverged();
  trace.message = opt.message();
  return trace;
}

struct ReferenceSolution {
  Vector x;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

/// Full-batch L-BFGS with Armijo backtracking.
inline ReferenceSolution lbfgs_minimize(const FiniteSumProblem& problem, double tol,
                                        std::size_t max_iterations) {
  const std::size_t memory = 10;
  Vector x = Vector::Zero(static_cast<Eigen::Index>(problem.dimension()));
  double fx = problem.value(x);
  Vector g = problem.full_grad(x);
  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  std::size_t it = 0;
  for (; it < max_iterations && g.norm() > tol; ++it) {
    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Vector dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = s_hist.empty() ? 1.0 / std::max(1.0, g.norm()) : 1.0;
    Vector next;
    Vector g_next;
    double f_next = 0.0;
    bool accepted = false;
    const double g_norm = g.norm();
    for (int bt = 0; bt < 60; ++bt) {
      next = x + step * dir;
      f_next = problem.value(next);
      if (std::isfinite(f_next) && f_next <= fx + 1e-4 * step * slope &&
          std::abs(fx - f_next) > 1e-14 * std::abs(fx)) {
        accepted = true;
        g_next = problem.full_grad(next);
        break;
      }
      // Below rounding in f the decrease test is blind; require a smaller gradient instead.
      if (std::isfinite(f_next) && f_next <= fx + 1e-14 * std::abs(fx)) {
        g_next = problem.full_grad(next);
        if (g_next.norm() < g_norm) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted || next == x) break;
    Vector s = next - x;
    Vector y = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      if (s_hist.size() == memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x = std::move(next);
    fx = f_next;
    g = std::move(g_next);
  }
  return {x, fx, g.norm(), it};
}

}  // namespace detail

/// High-accuracy minimizer. Least squares uses the weighted normal
/// equations (minimum-norm solution); the logistic problem runs full-batch
/// L-BFGS until ||grad f|| <= tol. Throws ConvergenceError when the
/// tolerance is not reached (e.g. separable data, where the infimum is not
/// attained).
inline ReferenceSolution reference_solution(const FiniteSumProblem& problem, double tol = 1e-10,
                                            std::size_t max_iterations = 20000) {
  ReferenceSolution out;
  if (problem.kind() == ProblemKind::least_squares) {
    const auto& data = problem.data();
    const auto p = static_cast<Eigen::Index>(problem.dimension());
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    const double n = static_cast<double>(problem.components());
    for (std::size_t i = 0; i < problem.components(); ++i) {
      const double w = 1.0 / (n * static_cast<double>(problem.group_size(i)));
      const auto rows = data.features.middleRows(static_cast<Eigen::Index>(problem.group_begin(i)),
                                                 static_cast<Eigen::Index>(problem.group_size(i)));
      normal.noalias() += w * rows.transpose() * rows;
      rhs.noalias() += w * rows.transpose() *
                       data.targets.segment(static_cast<Eigen::Index>(problem.group_begin(i)),
                                            rows.rows());
    }
    out.x = normal.completeOrthogonalDecomposition().solve(rhs);
    out.value = problem.value(out.x);
    out.grad_norm = problem.full_grad(out.x).norm();
    if (!(out.grad_norm <= std::max(tol, 1e-12 * (1.0 + rhs.norm()))))
      throw ConvergenceError("normal equations solve missed the tolerance", out.grad_norm);
    return out;
  }
  out = detail::lbfgs_minimize(problem, tol, max_iterations);
  if (!(out.grad_norm <= tol))
    throw ConvergenceError("reference solve stopped after " + std::to_string(out.iterations) +
                               " iterations with gradient norm " + std::to_string(out.grad_norm),
                           out.grad_norm);
  return out;
}

struct RateFit {
  double constant = 0.0;  // C in gap ~ C t^slope
  double slope = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log(f(xbar_t) - f*) against log t over the tail
/// half of each trace's checkpoints. Nonpositive gaps are dropped.
inline RateFit rate_fit(const std::vector<RunTrace>& traces, double f_star) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& trace : traces) {
    const auto& cps = trace.checkpoints;
    for (std::size_t k = cps.size() / 2; k < cps.size(); ++k) {
      const double gap = cps[k].average_objective - f_star;
      if (!(gap > 0.0) || !std::isfinite(gap)) continue;
      xs.push_back(std::log(static_cast<double>(cps[k].t)));
      ys.push_back(std::log(gap));
    }
  }
  if (xs.size() < 2) throw AnalysisError("fewer than two positive gaps to fit");
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  if (!(sxx > 0.0)) throw AnalysisError("all fitted points share one t");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.constant = std::exp(my - fit.slope * mx);
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = xs.size();
  return fit;
}

}  // namespace adalvr

#endif  // ADALVR_OPTIMIZER_HPP
