#ifndef ADALVR_PROBLEM_HPP
#define ADALVR_PROBLEM_HPP

#include "adalvr/core.hpp"
#include "adalvr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace adalvr {

enum class ProblemKind { multinomial_logistic, least_squares };

inline const char* to_string(ProblemKind kind) {
  return kind == ProblemKind::multinomial_logistic ? "logistic" : "ls";
}

/// f(x) = (1/n) sum_i f_i(x), where component f_i is the mean loss over a
/// fixed contiguous group of `batch_size` samples (the last group may be
/// shorter). No regularization.
///
/// Multinomial logistic: x is the K x p weight matrix stored class-major
/// (x[k * p + j] = W(k, j)), sample loss logsumexp(W a) - (W a)_y.
/// Least squares: x has p entries, sample loss (<a, x> - y)^2 / 2.
///
/// Evaluation is const and thread-safe.
class FiniteSumProblem {
 public:
  FiniteSumProblem(ProblemKind kind, Dataset data, std::size_t batch_size = 1)
      : kind_(kind), data_(std::move(data)) {
    data_.validate();
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (kind_ == ProblemKind::multinomial_logistic) {
      if (data_.task != Task::classification)
        throw std::invalid_argument("logistic problem needs class labels");
      classes_ = std::max(data_.n_classes, 2);
    } else {
      classes_ = 1;
    }
    const std::size_t n = data_.n_samples();
    for (std::size_t start = 0; start < n; start += batch_size)
      group_start_.push_back(start);
    group_start_.push_back(n);

    double bound = 0.0;
    const double factor = kind_ == ProblemKind::multinomial_logistic ? 0.5 : 1.0;
    for (std::size_t i = 0; i < components(); ++i) {
      double mean = 0.0;
      for (std::size_t s = group_start_[i]; s < group_start_[i + 1]; ++s)
        mean += data_.features.row(static_cast<Eigen::Index>(s)).squaredNorm();
      mean /= static_cast<double>(group_size(i));
      bound = std::max(bound, factor * mean);
    }
    smoothness_ = bound;
  }

  ProblemKind kind() const { return kind_; }
  const Dataset& data() const { return data_; }
  std::size_t components() const { return group_start_.size() - 1; }
  std::size_t n_classes() const { return static_cast<std::size_t>(classes_); }
  std::size_t n_features() const { return data_.n_features(); }
  std::size_t dimension() const { return n_classes() * n_features(); }
  std::size_t group_size(std::size_t i) const { return group_start_[i + 1] - group_start_[i]; }
  std::size_t group_begin(std::size_t i) const { return group_start_[i]; }

  /// L-hat: max over components of the batch mean of ||a||^2 (least
  /// squares) or ||a||^2 / 2 (softmax Hessian bound).
  double smoothness_upper_bound() const { return smoothness_; }

  double component_value(std::size_t i, const Vector& x) const {
    check_index(i);
    check_dim(x);
    return group_value(i, x);
  }

  double value(const Vector& x) const {
    check_dim(x);
    CompensatedSum sum;
    for (std::size_t i = 0; i < components(); ++i) sum += group_value(i, x);
    return sum.value() / static_cast<double>(components());
  }

  void component_grad(std::size_t i, const Vector& x, Vector& out) const {
    check_index(i);
    check_dim(x);
    group_grad(i, x, out);
  }

  Vector component_grad(std::size_t i, const Vector& x) const {
    Vector out;
    component_grad(i, x, out);
    return out;
  }

  /// Arithmetic mean of the component gradients, summed in index order.
  Vector full_grad(const Vector& x) const {
    check_dim(x);
    Vector sum = Vector::Zero(x.size());
    Vector g;
    for (std::size_t i = 0; i < components(); ++i) {
      group_grad(i, x, g);
      sum += g;
    }
    return sum / static_cast<double>(components());
  }

  /// D_{f_i}(y, x) = f_i(y) - f_i(x) - <grad f_i(x), y - x>.
  double bregman_divergence(std::size_t i, const Vector& y, const Vector& x) const {
    check_index(i);
    check_dim(x);
    check_dim(y);
    Vector g;
    group_grad(i, x, g);
    return group_value(i, y) - group_value(i, x) - g.dot(y - x);
  }

  /// Class scores of each row of `features`.
  Matrix logits(const Vector& x, const Matrix& features) const {
    if (kind_ != ProblemKind::multinomial_logistic)
      throw UnsupportedError("logits are only defined for the logistic problem");
    check_dim(x);
    if (static_cast<std::size_t>(features.cols()) != n_features())
      throw std::invalid_argument("feature count mismatch");
    return features * weights(x).transpose();
  }

  /// Argmax class per row; ties go to the lowest class index.
  std::vector<int> predict(const Vector& x, const Matrix& features) const {
    const Matrix scores = logits(x, features);
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < scores.cols(); ++k)
        if (scores(r, k) > scores(r, best)) best = k;
      out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
  }

 private:
  using WeightMap = Eigen::Map<const Matrix>;

  WeightMap weights(const Vector& x) const {
    return WeightMap(x.data(), classes_, static_cast<Eigen::Index>(n_features()));
  }

  void check_dim(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != dimension())
      throw std::invalid_argument("expected a vector of length " + std::to_string(dimension()) +
                                  ", got " + std::to_string(x.size()));
  }

  void check_index(std::size_t i) const {
    if (i >= components())
      throw std::invalid_argument("component index " + std::to_string(i) + " out of range [0, " +
                                  std::to_string(components()) + ")");
  }

  auto group_rows(std::size_t i) const {
    return data_.features.middleRows(static_cast<Eigen::Index>(group_start_[i]),
                                     static_cast<Eigen::Index>(group_size(i)));
  }

  double group_value(std::size_t i, const Vector& x) const {
    const auto rows = group_rows(i);
    const auto begin = static_cast<Eigen::Index>(group_start_[i]);
    double total = 0.0;
    if (kind_ == ProblemKind::least_squares) {
      const Vector residual = rows * x - data_.targets.segment(begin, rows.rows());
      total = 0.5 * residual.squaredNorm();
    } else {
      const Matrix scores = rows * weights(x).transpose();
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const double top = scores.row(r).maxCoeff();
        const double lse = top + std::log((scores.row(r).array() - top).exp().sum());
        total += lse - scores(r, static_cast<Eigen::Index>(data_.targets[begin + r]));
      }
    }
    return total / static_cast<double>(rows.rows());
  }

  void group_grad(std::size_t i, const Vector& x, Vector& out) const {
    const auto rows = group_rows(i);
    const auto begin = static_cast<Eigen::Index>(group_start_[i]);
    const double inv = 1.0 / static_cast<double>(rows.rows());
    out.resize(x.size());
    if (kind_ == ProblemKind::least_squares) {
      const Vector residual = rows * x - data_.targets.segment(begin, rows.rows());
      out.noalias() = inv * (rows.transpose() * residual);
    } else {
      Matrix resid = rows * weights(x).transpose();  // b x K scores -> softmax - onehot
      for (Eigen::Index r = 0; r < resid.rows(); ++r) {
        const double top = resid.row(r).maxCoeff();
        resid.row(r) = (resid.row(r).array() - top).exp();
        resid.row(r) /= resid.row(r).sum();
        resid(r, static_cast<Eigen::Index>(data_.targets[begin + r])) -= 1.0;
      }
      Eigen::Map<Matrix> grad(out.data(), classes_, static_cast<Eigen::Index>(n_features()));
      grad.noalias() = inv * (resid.transpose() * rows);
    }
  }

  ProblemKind kind_;
  Dataset data_;
  int classes_ = 1;
  std::vector<std::size_t> group_start_;
  double smoothness_ = 0.0;
};

}  // namespace adalvr

#endif  // ADALVR_PROBLEM_HPP
