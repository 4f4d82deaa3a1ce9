#ifndef ADALVR_TEST_UTIL_HPP
#define ADALVR_TEST_UTIL_HPP

#include "adalvr/adalvr.hpp"

#include <random>

namespace adalvr::testing {

/// Least squares on the two scalar samples (a=1, b=0) and (a=1, b=2).
inline FiniteSumProblem two_point_least_squares() {
  Dataset d;
  d.task = Task::regression;
  d.features.resize(2, 1);
  d.features << 1.0, 1.0;
  d.targets.resize(2);
  d.targets << 0.0, 2.0;
  return FiniteSumProblem(ProblemKind::least_squares, d, 1);
}

inline FiniteSumProblem small_logistic(std::size_t samples, std::size_t features, int classes,
                                       std::size_t batch, std::uint64_t seed) {
  LogisticDataSpec spec;
  spec.n_samples = samples;
  spec.n_features = features;
  spec.n_classes = classes;
  spec.signal = 3.0;
  spec.label_noise = 0.2;
  spec.seed = seed;
  return FiniteSumProblem(ProblemKind::multinomial_logistic, make_logistic_data(spec).data, batch);
}

inline FiniteSumProblem small_least_squares(std::size_t samples, std::size_t features,
                                            std::size_t batch, std::uint64_t seed) {
  LeastSquaresDataSpec spec;
  spec.n_samples = samples;
  spec.n_features = features;
  spec.seed = seed;
  return FiniteSumProblem(ProblemKind::least_squares, make_least_squares_data(spec).data, batch);
}

inline Vector random_vector(std::size_t d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
  return v;
}

/// Central finite differences of f.
template <typename F>
Vector finite_difference_grad(F&& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = f(probe);
    probe[k] = x[k] - h;
    const double down = f(probe);
    probe[k] = x[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace adalvr::testing

#endif  // ADALVR_TEST_UTIL_HPP
