#ifndef ADALVR_SCALING_HPP
#define ADALVR_SCALING_HPP

#include "adalvr/core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace adalvr {

enum class ScalingKind { constant, adagrad_norm, adagrad_diag, rmsprop, adam };

inline const char* to_string(ScalingKind kind) {
  switch (kind) {
    case ScalingKind::constant: return "constant";
    case ScalingKind::adagrad_norm: return "adagrad_norm";
    case ScalingKind::adagrad_diag: return "adagrad_diag";
    case ScalingKind::rmsprop: return "rmsprop";
    case ScalingKind::adam: return "adam";
  }
  return "?";
}

inline bool is_adagrad(ScalingKind kind) {
  return kind == ScalingKind::adagrad_norm || kind == ScalingKind::adagrad_diag;
}

struct ScalingParams {
  double gamma = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

/// Preconditioner accumulator G_t and its root A_t = G_t^(1/2).
///
/// The scalar kinds (constant, adagrad_norm) keep a one-entry accumulator;
/// the others keep the diagonal of G_t. There is no epsilon floor: the
/// direction uses the Moore-Penrose pseudo-inverse of A_t, so coordinates
/// with a zero accumulator get a zero step. `constant` is the identity
/// (A_t = 1), used for the non-adaptive baselines.
///
/// Adam follows the update m = b1 m + (1 - b1) g, G = b2 G + (1 - b2) g*g
/// without bias correction.
class ScalingState {
 public:
  ScalingState() = default;
  ScalingState(ScalingKind kind, std::size_t dim, ScalingParams params = {})
      : kind_(kind), dim_(dim), params_(params) {
    if (dim < 1) throw std::invalid_argument("scaling dimension must be >= 1");
    if (kind == ScalingKind::rmsprop && !(params.gamma > 0.0 && params.gamma < 1.0))
      throw std::invalid_argument("rmsprop gamma must lie in (0, 1)");
    if (kind == ScalingKind::adam &&
        !(params.beta1 > 0.0 && params.beta1 < 1.0 && params.beta2 > 0.0 && params.beta2 < 1.0))
      throw std::invalid_argument("adam betas must lie in (0, 1)");
    accumulator_ = Vector::Zero(scalar() ? 1 : static_cast<Eigen::Index>(dim));
    if (kind == ScalingKind::constant) accumulator_.setOnes();
    if (kind == ScalingKind::adam) momentum_ = Vector::Zero(static_cast<Eigen::Index>(dim));
  }

  ScalingKind kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }
  std::size_t step_count() const { return steps_; }
  const ScalingParams& params() const { return params_; }
  bool scalar() const {
    return kind_ == ScalingKind::constant || kind_ == ScalingKind::adagrad_norm;
  }

  /// G_t, one entry for scalar kinds, d entries otherwise.
  const Vector& accumulator() const { return accumulator_; }
  /// m_t (Adam only; empty otherwise).
  const Vector& momentum() const { return momentum_; }

  /// 1 for scalar kinds, sqrt(d) for diagonal kinds.
  double alpha() const { return scalar() ? 1.0 : std::sqrt(static_cast<double>(dim_)); }

  void accumulate(const Vector& g) {
    if (static_cast<std::size_t>(g.size()) != dim_)
      throw std::invalid_argument("gradient length mismatch in accumulate");
    if (!g.allFinite()) throw NumericError("non-finite gradient passed to accumulate");
    switch (kind_) {
      case ScalingKind::constant:
        break;
      case ScalingKind::adagrad_norm:
        accumulator_[0] += g.squaredNorm();
        break;
      case ScalingKind::adagrad_diag:
        accumulator_.array() += g.array().square();
        break;
      case ScalingKind::rmsprop:
        accumulator_ = params_.gamma * g.array().square().matrix() +
                       (1.0 - params_.gamma) * accumulator_;
        break;
      case ScalingKind::adam:
        momentum_ = params_.beta1 * momentum_ + (1.0 - params_.beta1) * g;
        accumulator_ = params_.beta2 * accumulator_ +
                       (1.0 - params_.beta2) * g.array().square().matrix();
        break;
    }
    ++steps_;
  }

  /// A_t as stored: one entry (scalar kinds) or the diagonal.
  Vector root() const { return accumulator_.array().sqrt().matrix(); }

  /// Tr(A_t); the scalar kinds count as a 1x1 matrix.
  double trace() const { return accumulator_.array().sqrt().sum(); }

  /// A_t^+ v.
  Vector apply_pseudo_inverse(const Vector& v) const { return pseudo_inverse_apply(root(), v); }

  /// Step direction A_t^+ g, or A_t^+ m_t for Adam. Call after accumulate(g).
  Vector precondition(const Vector& g) const {
    return apply_pseudo_inverse(kind_ == ScalingKind::adam ? momentum_ : g);
  }

  /// A^+ v for an A given as one scalar entry or a diagonal.
  static Vector pseudo_inverse_apply(const Vector& a, const Vector& v) {
    if (a.size() == 1) return a[0] > 0.0 ? Vector(v / a[0]) : Vector(Vector::Zero(v.size()));
    if (a.size() != v.size()) throw std::invalid_argument("pseudo-inverse size mismatch");
    Vector out(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = a[k] > 0.0 ? v[k] / a[k] : 0.0;
    return out;
  }

 private:
  ScalingKind kind_ = ScalingKind::adagrad_norm;
  std::size_t dim_ = 0;
  ScalingParams params_;
  Vector accumulator_;
  Vector momentum_;
  std::size_t steps_ = 0;
};

/// <v, A v> with A given as one scalar entry or a diagonal.
inline double mahalanobis_norm_sq(const Vector& a, const Vector& v) {
  if (a.size() == 1) return a[0] * v.squaredNorm();
  if (a.size() != v.size()) throw std::invalid_argument("mahalanobis size mismatch");
  return (a.array() * v.array().square()).sum();
}

/// Feasible set: all of R^d or an axis-aligned box.
class Domain {
 public:
  static Domain unconstrained() { return Domain(); }

  static Domain box(Vector lower, Vector upper) {
    if (lower.size() != upper.size() || lower.size() < 1)
      throw std::invalid_argument("box bounds must have equal nonzero length");
    if (!lower.allFinite() || !upper.allFinite())
      throw std::invalid_argument("box bounds must be finite");
    if ((lower.array() > upper.array()).any())
      throw std::invalid_argument("box lower bound exceeds upper bound");
    Domain d;
    d.bounded_ = true;
    d.lower_ = std::move(lower);
    d.upper_ = std::move(upper);
    return d;
  }

  /// Box of the given half-width around `center`.
  static Domain centered_box(const Vector& center, double half_width) {
    if (!(half_width >= 0.0)) throw std::invalid_argument("half-width must be >= 0");
    return box(center.array() - half_width, center.array() + half_width);
  }

  bool bounded() const { return bounded_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  /// Euclidean diameter; +inf when unconstrained.
  double diameter() const {
    return bounded_ ? (upper_ - lower_).norm() : std::numeric_limits<double>::infinity();
  }

  bool contains(const Vector& x) const {
    if (!bounded_) return true;
    return (x.array() >= lower_.array()).all() && (x.array() <= upper_.array()).all();
  }

  /// Clip to the box. For a diagonal or scalar A this is the A-norm projection,
  /// including coordinates where A is zero.
  Vector clip(const Vector& x) const {
    if (!bounded_) return x;
    if (x.size() != lower_.size()) throw std::invalid_argument("projection size mismatch");
    return x.cwiseMax(lower_).cwiseMin(upper_);
  }

 private:
  bool bounded_ = false;
  Vector lower_;
  Vector upper_;
};

/// argmin_{y in X} ||y - x||_{A_t}; separable for the supported preconditioners.
inline Vector project(const Vector& x, const Domain& domain, const ScalingState& /*state*/) {
  return domain.clip(x);
}

}  // namespace adalvr

#endif  // ADALVR_SCALING_HPP
