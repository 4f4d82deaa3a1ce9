#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace adalvr;

namespace {

struct Split {
  FiniteSumProblem train;
  Dataset test;
};

Split small_split() {
  LogisticDataSpec spec;
  spec.n_samples = 300;
  spec.n_features = 4;
  spec.n_classes = 3;
  spec.seed = 5;
  auto [train, test] = train_test_split(make_logistic_data(spec).data, 0.8, 1);
  return {FiniteSumProblem(ProblemKind::multinomial_logistic, train, 5), test};
}

}  // namespace

TEST(Bench, AlgorithmNames) {
  const auto a = parse_algorithm("adasaga_diag");
  EXPECT_EQ(a.name, "AdaSAGA-Diag");
  EXPECT_EQ(a.estimator, EstimatorKind::saga);
  EXPECT_EQ(a.scaling, ScalingKind::adagrad_diag);
  EXPECT_EQ(parse_algorithm("L-SVRG").estimator, EstimatorKind::lsvrg);
  EXPECT_EQ(parse_algorithm("Adam LSVRG").scaling, ScalingKind::adam);
  EXPECT_THROW(parse_algorithm("Nesterov"), std::invalid_argument);
  EXPECT_EQ(algorithm_names().size(), 16u);
}

TEST(Bench, BalancedAccuracyHandValues) {
  const std::vector<int> labels{0, 0, 0, 1};
  const std::vector<int> all_zero{0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(balanced_accuracy(all_zero, labels, 2), 0.5);
  EXPECT_DOUBLE_EQ(balanced_accuracy(labels, labels, 2), 1.0);
  const std::vector<int> mixed{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(balanced_accuracy(mixed, labels, 3), (2.0 / 3.0 + 1.0) / 2.0);
  EXPECT_THROW(balanced_accuracy(std::vector<int>{}, std::vector<int>{}, 2), std::invalid_argument);
  EXPECT_THROW(balanced_accuracy(mixed, std::vector<int>{0, 1}, 2), std::invalid_argument);
  EXPECT_THROW(balanced_accuracy(mixed, std::vector<int>{0, 1, 2, 5}, 3), std::invalid_argument);
}

TEST(Bench, ScheduleBudget) {
  GridSpec spec;
  spec.epochs = 2.5;
  spec.checkpoints_per_epoch = 4;
  const auto s = make_schedule(spec, 10);
  EXPECT_EQ(s.budget, 25u);
  EXPECT_EQ(s.stride, 2u);
  EXPECT_EQ(s.checkpoints, 13u);
  EXPECT_EQ(s.threshold(13), 25u);
}

TEST(Bench, CellRowsFollowGradientCheckpoints) {
  const auto split = small_split();
  GridSpec spec;
  spec.algorithms = {parse_algorithm("AdaLSVRG-Diag")};
  spec.ltilde = {1.0};
  spec.epochs = 3;
  const std::size_t n = split.train.components();
  const auto sched = make_schedule(spec, n);
  const auto rows = run_cell(spec, spec.algorithms[0], 1.0, 7, split.train, &split.test);
  ASSERT_EQ(rows.size(), sched.checkpoints);
  std::uint64_t prev = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_GE(rows[k].gradients, sched.threshold(k + 1));
    EXPECT_GE(rows[k].gradients, prev);
    prev = rows[k].gradients;
    EXPECT_DOUBLE_EQ(rows[k].epoch, double(rows[k].gradients) / double(n));
    ASSERT_TRUE(rows[k].balanced_accuracy.has_value());
    EXPECT_GE(*rows[k].balanced_accuracy, 0.0);
    EXPECT_LE(*rows[k].balanced_accuracy, 1.0);
    EXPECT_FALSE(rows[k].diverged);
  }
  EXPECT_EQ(rows[0].gradients, n);  // initialization alone reaches the first threshold
}

TEST(Bench, DivergedCellEndsWithSingleFlaggedRow) {
  const auto prob = adalvr::testing::small_least_squares(100, 3, 2, 1);
  GridSpec spec;
  spec.algorithms = {parse_algorithm("SGD")};
  spec.ltilde = {1e-8};
  spec.epochs = 5;
  const auto rows = run_cell(spec, spec.algorithms[0], 1e-8, 0, prob, nullptr);
  ASSERT_FALSE(rows.empty());
  EXPECT_TRUE(rows.back().diverged);
  EXPECT_TRUE(std::isnan(rows.back().train_objective));
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) EXPECT_FALSE(rows[k].diverged);
}

TEST(Bench, GridOrderAndDeterminismAcrossWorkers) {
  const auto split = small_split();
  GridSpec spec;
  spec.algorithms = {parse_algorithm("SAGA"), parse_algorithm("AdaSAGA-Norm")};
  spec.ltilde = {0.5, 5.0};
  spec.seeds = {0, 1};
  spec.epochs = 1;
  spec.workers = 1;
  const auto serial = run_grid(spec, split.train, &split.test);
  spec.workers = 3;
  std::vector<ResultRow> streamed;
  const auto parallel = run_grid(spec, split.train, &split.test, [&](const std::vector<ResultRow>& rows) {
    streamed.insert(streamed.end(), rows.begin(), rows.end());
  });
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t k = 0; k < serial.size(); ++k) EXPECT_TRUE(serial[k] == parallel[k]) << k;
  EXPECT_EQ(streamed.size(), parallel.size());
  EXPECT_EQ(serial.front().algorithm, "SAGA");
  EXPECT_EQ(serial.back().algorithm, "AdaSAGA-Norm");
  EXPECT_EQ(serial.back().seed, 1u);
}

TEST(Bench, GridSpecValidation) {
  const auto split = small_split();
  GridSpec spec;
  EXPECT_THROW(run_grid(spec, split.train), std::invalid_argument);
  spec.algorithms = {parse_algorithm("SAGA")};
  spec.ltilde = {-1.0};
  EXPECT_THROW(run_grid(spec, split.train), std::invalid_argument);
}

TEST(BenchCsv, HeaderSchema) {
  std::ostringstream out;
  emit_csv({}, out);
  EXPECT_EQ(out.str(),
            "algorithm,ltilde,seed,gradients,epoch,train_objective,balanced_accuracy,diverged\n");
}

TEST(BenchCsv, RoundTripIsExact) {
  std::vector<ResultRow> rows(3);
  rows[0] = {"AdaSAGA-Diag", 0.1, 3, 123, 1.0 / 3.0, 0.69314718055994529, 0.8125, false};
  rows[1] = {"SGD", 100.0, 0, 40, 0.25, 1e-300, std::nullopt, false};
  rows[2] = {"Adam", 1e-3, 9, 77, 2.0, std::numeric_limits<double>::quiet_NaN(), std::nullopt, true};
  std::stringstream buf;
  emit_csv(rows, buf);
  const auto back = parse_results_csv(buf);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_TRUE(back[0] == rows[0]);
  EXPECT_TRUE(back[1] == rows[1]);
  EXPECT_TRUE(back[2].diverged);
  EXPECT_TRUE(std::isnan(back[2].train_objective));
  EXPECT_FALSE(back[2].balanced_accuracy.has_value());
}

TEST(BenchCsv, DivergedRowsHaveEmptyCells) {
  ResultRow r{"GD", 1.0, 0, 10, 1.0, std::numeric_limits<double>::quiet_NaN(), 0.5, true};
  std::ostringstream out;
  write_csv_rows(out, {r});
  EXPECT_EQ(out.str(), "GD,1,0,10,1,,,1\n");
}

TEST(BenchCsv, MalformedInput) {
  std::istringstream bad_header("algo,x\n");
  EXPECT_THROW(parse_results_csv(bad_header), FormatError);
  std::istringstream short_row(std::string(kCsvHeader) + "\nSGD,1,0\n");
  try {
    parse_results_csv(short_row);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_value(std::string(kCsvHeader) + "\nSGD,one,0,1,1,1,,0\n");
  EXPECT_THROW(parse_results_csv(bad_value), FormatError);
}
