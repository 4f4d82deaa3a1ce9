#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace adalvr;
using adalvr::testing::finite_difference_grad;
using adalvr::testing::random_vector;

TEST(Problem, LeastSquaresHandValues) {
  const auto prob = adalvr::testing::two_point_least_squares();
  const Vector one = Vector::Constant(1, 1.0);
  const Vector zero = Vector::Zero(1);
  // (1/2) mean((1-0)^2, (1-2)^2)
  EXPECT_DOUBLE_EQ(prob.value(one), 0.5);
  EXPECT_DOUBLE_EQ(prob.component_grad(1, one)[0], -1.0);
  EXPECT_DOUBLE_EQ(prob.full_grad(zero)[0], -1.0);
  EXPECT_DOUBLE_EQ(prob.full_grad(one)[0], 0.0);
  EXPECT_DOUBLE_EQ(prob.smoothness_upper_bound(), 1.0);
}

TEST(Problem, LogisticAtZeroIsLogK) {
  for (int K : {2, 3, 7}) {
    const auto prob = adalvr::testing::small_logistic(30, 4, K, 3, 5);
    const Vector x = Vector::Zero(static_cast<Eigen::Index>(prob.dimension()));
    EXPECT_NEAR(prob.value(x), std::log(static_cast<double>(K)), 1e-14);
    EXPECT_EQ(prob.dimension(), static_cast<std::size_t>(K) * 4);
  }
}

TEST(Problem, LogisticBalancedPairHasZeroMeanGradientAtOrigin) {
  Dataset d;
  d.n_classes = 2;
  d.features.resize(2, 2);
  d.features << 0.3, 0.7, 0.3, 0.7;
  d.targets.resize(2);
  d.targets << 0, 1;
  FiniteSumProblem prob(ProblemKind::multinomial_logistic, d, 1);
  const Vector g = prob.full_grad(Vector::Zero(4));
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Problem, ErrorsOnBadDimensionAndIndex) {
  const auto prob = adalvr::testing::two_point_least_squares();
  EXPECT_THROW(prob.value(Vector::Zero(2)), std::invalid_argument);
  EXPECT_THROW(prob.component_grad(2, Vector::Zero(1)), std::invalid_argument);
  EXPECT_THROW(prob.full_grad(Vector::Zero(3)), std::invalid_argument);
}

TEST(Problem, ValueIsMeanOfComponentValues) {
  std::mt19937_64 rng(11);
  for (const auto& prob : {adalvr::testing::small_logistic(97, 5, 4, 10, 1),
                           adalvr::testing::small_least_squares(53, 6, 4, 2)}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = random_vector(prob.dimension(), rng);
      double sum = 0.0;
      for (std::size_t i = 0; i < prob.components(); ++i) sum += prob.component_value(i, x);
      const double mean = sum / static_cast<double>(prob.components());
      const double f = prob.value(x);
      EXPECT_LE(std::abs(f - mean), 1e-12 * (1.0 + std::abs(f)));
    }
  }
}

TEST(Problem, FullGradIsExactMeanOfComponents) {
  std::mt19937_64 rng(3);
  const auto prob = adalvr::testing::small_logistic(40, 3, 3, 4, 9);
  const Vector x = random_vector(prob.dimension(), rng);
  Vector sum = Vector::Zero(x.size());
  for (std::size_t i = 0; i < prob.components(); ++i) sum += prob.component_grad(i, x);
  const Vector mean = sum / static_cast<double>(prob.components());
  EXPECT_TRUE(mean == prob.full_grad(x));
}

TEST(Problem, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (const auto& prob : {adalvr::testing::small_logistic(60, 4, 3, 7, 4),
                           adalvr::testing::small_least_squares(60, 5, 7, 4)}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = random_vector(prob.dimension(), rng);
      const Vector fd =
          finite_difference_grad([&](const Vector& z) { return prob.value(z); }, x, 1e-5);
      const Vector g = prob.full_grad(x);
      EXPECT_LE((fd - g).norm(), 1e-5 * g.norm()) << "trial " << trial;
      const std::size_t i = static_cast<std::size_t>(trial) % prob.components();
      const Vector fdi = finite_difference_grad(
          [&](const Vector& z) { return prob.component_value(i, z); }, x, 1e-5);
      const Vector gi = prob.component_grad(i, x);
      EXPECT_LE((fdi - gi).norm(), 1e-5 * gi.norm()) << "component " << i;
    }
  }
}

TEST(Problem, ConvexityWitness) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& prob : {adalvr::testing::small_logistic(50, 4, 3, 5, 2),
                           adalvr::testing::small_least_squares(50, 4, 5, 2)}) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vector x = random_vector(prob.dimension(), rng, 2.0);
      const Vector y = random_vector(prob.dimension(), rng, 2.0);
      const double lambda = unit(rng);
      const double mid = prob.value(lambda * x + (1.0 - lambda) * y);
      EXPECT_LE(mid, lambda * prob.value(x) + (1.0 - lambda) * prob.value(y) + 1e-10);
    }
  }
}

TEST(Problem, SmoothnessAndBregmanWitness) {
  std::mt19937_64 rng(13);
  for (const auto& prob : {adalvr::testing::small_logistic(40, 5, 4, 4, 6),
                           adalvr::testing::small_least_squares(40, 5, 4, 6)}) {
    const double L = prob.smoothness_upper_bound();
    for (int trial = 0; trial < 50; ++trial) {
      const Vector x = random_vector(prob.dimension(), rng, 2.0);
      const Vector y = random_vector(prob.dimension(), rng, 2.0);
      for (std::size_t i = 0; i < prob.components(); ++i) {
        const Vector gx = prob.component_grad(i, x);
        const Vector gy = prob.component_grad(i, y);
        EXPECT_LE((gx - gy).norm(), L * (x - y).norm() * (1.0 + 1e-9));
        EXPECT_TRUE(check_bregman_smoothness(prob, i, y, x).pass);
        EXPECT_GE(prob.bregman_divergence(i, y, x), -1e-12);
      }
    }
  }
}

TEST(Problem, BregmanHandValues) {
  Dataset d;
  d.task = Task::regression;
  d.features = Matrix::Ones(1, 1);
  d.targets = Vector::Zero(1);
  FiniteSumProblem prob(ProblemKind::least_squares, d, 1);
  const Vector x = Vector::Constant(1, 0.7);
  const Vector y = Vector::Constant(1, -1.3);
  EXPECT_DOUBLE_EQ(prob.bregman_divergence(0, x, x), 0.0);
  EXPECT_NEAR(prob.bregman_divergence(0, y, x), 0.5 * 2.0 * 2.0, 1e-14);
}

TEST(Problem, SmoothnessBoundExamples) {
  Dataset ls;
  ls.task = Task::regression;
  ls.features.resize(1, 2);
  ls.features << 1.0, 1.0;
  ls.targets = Vector::Zero(1);
  EXPECT_DOUBLE_EQ(FiniteSumProblem(ProblemKind::least_squares, ls).smoothness_upper_bound(), 2.0);

  Dataset lg;
  lg.n_classes = 3;
  lg.features.resize(1, 2);
  lg.features << 2.0, 0.0;  // ||a||^2 = 4
  lg.targets = Vector::Zero(1);
  FiniteSumProblem logistic(ProblemKind::multinomial_logistic, lg);
  EXPECT_DOUBLE_EQ(logistic.smoothness_upper_bound(), 2.0);

  lg.features *= 3.0;
  EXPECT_DOUBLE_EQ(FiniteSumProblem(ProblemKind::multinomial_logistic, lg).smoothness_upper_bound(),
                   9.0 * 2.0);
}

TEST(Problem, BatchPartitionCoversEverySampleOnce) {
  const auto prob = adalvr::testing::small_least_squares(23, 2, 5, 1);
  EXPECT_EQ(prob.components(), 5u);
  std::size_t total = 0;
  for (std::size_t i = 0; i < prob.components(); ++i) {
    EXPECT_EQ(prob.group_begin(i), total);
    total += prob.group_size(i);
  }
  EXPECT_EQ(total, 23u);
  EXPECT_EQ(prob.group_size(4), 3u);
}

TEST(Problem, PredictArgmaxAndTies) {
  Dataset d;
  d.n_classes = 3;
  d.features = Matrix::Ones(4, 1);
  d.targets = Vector::Zero(4);
  FiniteSumProblem prob(ProblemKind::multinomial_logistic, d);
  for (int c : prob.predict(Vector::Zero(3), d.features)) EXPECT_EQ(c, 0);
  Vector x(3);
  x << 0.1, 0.7, 0.2;
  EXPECT_EQ(prob.predict(x, Matrix::Ones(1, 1))[0], 1);

  const auto ls = adalvr::testing::two_point_least_squares();
  EXPECT_THROW(ls.predict(Vector::Zero(1), Matrix::Ones(1, 1)), UnsupportedError);
}

TEST(Problem, PlantedParameterClassifiesWell) {
  LogisticDataSpec spec;
  spec.n_samples = 3000;
  spec.n_features = 6;
  spec.n_classes = 4;
  spec.seed = 17;
  const auto synth = make_logistic_data(spec);
  FiniteSumProblem prob(ProblemKind::multinomial_logistic, synth.data, 10);
  const auto pred = prob.predict(synth.planted, synth.data.features);
  EXPECT_GE(balanced_accuracy(pred, synth.data.labels(), 4), 0.9);
}
