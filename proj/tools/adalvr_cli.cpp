#include "adalvr/adalvr.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

using namespace adalvr;

namespace {

struct DataOptions {
  std::string dataset = "synthetic";
  std::string problem = "logistic";
  bool header = false;
  std::size_t max_rows = 0;
  std::size_t samples = 2000;
  std::size_t features = 20;
  int classes = 5;
  std::uint64_t data_seed = 0;
  std::size_t batch = 10;
  double train_fraction = 0.8;
  std::optional<double> p;
  bool project = false;
  double box_half_width = 10.0;
  ScalingParams params;
};

ProblemKind problem_kind(const DataOptions& o) {
  return o.problem == "ls" ? ProblemKind::least_squares : ProblemKind::multinomial_logistic;
}

Dataset load(const DataOptions& o) {
  const ProblemKind kind = problem_kind(o);
  if (o.dataset == "synthetic") {
    if (kind == ProblemKind::least_squares) {
      LeastSquaresDataSpec spec;
      spec.n_samples = o.samples;
      spec.n_features = o.features;
      spec.seed = o.data_seed;
      return make_least_squares_data(spec).data;
    }
    LogisticDataSpec spec;
    spec.n_samples = o.samples;
    spec.n_features = o.features;
    spec.n_classes = o.classes;
    spec.seed = o.data_seed;
    return make_logistic_data(spec).data;
  }
  CsvOptions csv;
  csv.header = o.header;
  csv.task = kind == ProblemKind::least_squares ? Task::regression : Task::classification;
  if (o.max_rows > 0) csv.max_rows = o.max_rows;
  return minmax_scale(load_dataset(o.dataset, csv));
}

void print_params(const char* key, const Vector& x) {
  std::printf("%s", key);
  for (Eigen::Index k = 0; k < x.size(); ++k) std::printf("%c%s", k ? ',' : '=', format_double(x[k]).c_str());
  std::printf("\n");
}

// run ----------------------------------------------------------------------------

struct RunOptions {
  std::vector<std::string> algos{"SAGA", "AdaSAGA-Diag"};
  std::vector<double> ltilde{0.001, 0.01, 0.1, 1, 10, 100};
  double epochs = 10.0;
  std::vector<std::uint64_t> seeds{0};
  std::size_t checkpoints_per_epoch = 4;
  std::size_t workers = 1;
  std::string out;
};

int cmd_run(const DataOptions& d, const RunOptions& r) {
  GridSpec spec;
  for (const auto& a : r.algos) spec.algorithms.push_back(parse_algorithm(a));
  spec.ltilde = r.ltilde;
  spec.epochs = r.epochs;
  spec.seeds = r.seeds;
  spec.checkpoints_per_epoch = r.checkpoints_per_epoch;
  spec.params = d.params;
  spec.p = d.p;
  spec.project = d.project;
  spec.box_half_width = d.box_half_width;
  spec.workers = r.workers;
  spec.validate();

  auto [train, test] = train_test_split(load(d), d.train_fraction, d.data_seed);
  const FiniteSumProblem problem(problem_kind(d), std::move(train), d.batch);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!r.out.empty()) {
    file.open(r.out);
    if (!file) throw Error("cannot open " + r.out + " for writing");
    out = &file;
  }
  write_csv_header(*out);
  const auto rows = run_grid(spec, problem, &test,
                             [&](const std::vector<ResultRow>& cell) { write_csv_rows(*out, cell); });
  if (!*out) throw Error("write failed");
  std::size_t diverged = 0;
  for (const auto& row : rows) diverged += row.diverged;
  std::fprintf(stderr, "%zu rows, %zu diverged cells, n=%zu d=%zu\n", rows.size(), diverged,
               problem.components(), problem.dimension());
  return 0;
}

// solve --------------------------------------------------------------------------

struct SolveOptions {
  std::string algo = "AdaSAGA-Diag";
  double eta = 1.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  std::size_t stride = 0;
  bool print_x = false;
};

int cmd_solve(const DataOptions& d, const SolveOptions& s) {
  const FiniteSumProblem problem(problem_kind(d), load(d), d.batch);
  const Algorithm algo = parse_algorithm(s.algo);
  const Vector x1 = Vector::Zero(static_cast<Eigen::Index>(problem.dimension()));
  OptimizerConfig cfg;
  cfg.estimator = algo.estimator;
  cfg.scaling = algo.scaling;
  cfg.params = d.params;
  cfg.eta = s.eta;
  cfg.p = d.p;
  cfg.iterations = s.iterations;
  cfg.seed = s.seed;
  cfg.project = d.project;
  if (d.project) cfg.domain = Domain::centered_box(x1, d.box_half_width);
  cfg.checkpoint_stride = s.stride > 0 ? s.stride : std::max<std::size_t>(1, s.iterations / 10);
  const RunTrace trace = run(cfg, problem, x1);

  std::printf("t,gradients,objective,average_objective\n");
  for (const auto& c : trace.checkpoints)
    std::printf("%zu,%llu,%s,%s\n", c.t, static_cast<unsigned long long>(c.gradients),
                format_double(c.objective).c_str(), format_double(c.average_objective).c_str());
  std::printf("algorithm=%s\nsteps=%zu\ngradients=%llu\nrefreshes=%llu\ndiverged=%d\n",
              algo.name.c_str(), trace.steps, static_cast<unsigned long long>(trace.gradients),
              static_cast<unsigned long long>(trace.refreshes), trace.diverged ? 1 : 0);
  if (trace.diverged) {
    std::printf("message=%s\n", trace.message.c_str());
    return 3;
  }
  std::printf("average_objective=%s\n", format_double(problem.value(trace.average)).c_str());
  if (s.print_x) print_params("average", trace.average);
  return 0;
}

// reference ----------------------------------------------------------------------

int cmd_reference(const DataOptions& d, double tol, std::size_t max_iterations, bool print_x) {
  const FiniteSumProblem problem(problem_kind(d), load(d), d.batch);
  const auto ref = reference_solution(problem, tol, max_iterations);
  std::printf("n=%zu\nd=%zu\nsmoothness=%s\nf_star=%s\ngrad_norm=%s\niterations=%zu\n",
              problem.components(), problem.dimension(),
              format_double(problem.smoothness_upper_bound()).c_str(),
              format_double(ref.value).c_str(), format_double(ref.grad_norm).c_str(),
              ref.iterations);
  if (print_x) print_params("x_star", ref.x);
  return 0;
}

// verify -------------------------------------------------------------------------

int cmd_verify(const DataOptions& d, std::size_t runs, std::size_t iterations, double eta) {
  const FiniteSumProblem problem(problem_kind(d), load(d), d.batch);
  const auto ref = reference_solution(problem);
  const Vector x1 = Vector::Zero(static_cast<Eigen::Index>(problem.dimension()));
  const Domain box = Domain::centered_box(x1, 10.0 * (x1 - ref.x).norm() + 1.0);

  std::map<std::string, double> worst;
  std::map<std::string, std::size_t> failures;
  auto record = [&](const LemmaReport& r) {
    const double rel = r.slack / (1.0 + std::abs(r.rhs));
    auto [it, fresh] = worst.emplace(r.id, rel);
    if (!fresh) it->second = std::min(it->second, rel);
    failures[r.id] += !r.pass;
  };
  const EstimatorKind estimators[] = {EstimatorKind::saga, EstimatorKind::lsvrg};
  const ScalingKind scalings[] = {ScalingKind::adagrad_norm, ScalingKind::adagrad_diag};
  for (std::size_t k = 0; k < runs; ++k) {
    OptimizerConfig cfg;
    cfg.estimator = estimators[k % 2];
    cfg.scaling = scalings[(k / 2) % 2];
    cfg.params = d.params;
    cfg.p = d.p;
    cfg.eta = eta;
    cfg.iterations = iterations;
    cfg.seed = k;
    cfg.project = true;
    cfg.domain = box;
    cfg.record_history = true;
    const RunTrace trace = run(cfg, problem, x1);
    record(check_regret_bound(trace, box, eta, ref.x));
    for (const auto& r : check_trace_bounds(trace)) record(r);
    record(check_weighted_distance(trace, box, ref.x));
    record(check_grad_subopt(problem, trace.average, ref.value));
  }
  std::size_t total = 0;
  for (const auto& [id, slack] : worst) {
    std::printf("%s %-22s min_relative_slack=%s failures=%zu/%zu\n", failures[id] ? "FAIL" : "PASS",
                id.c_str(), format_double(slack).c_str(), failures[id], runs);
    total += failures[id];
  }
  return total == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AdaLVR: adaptive variance-reduced finite-sum optimization"};
  app.set_config("--config", "", "INI/TOML file with option values; command-line flags win");
  app.require_subcommand(1);

  DataOptions data;
  app.add_option("--dataset", data.dataset, "CSV path (last column = target) or 'synthetic'")
      ->capture_default_str();
  app.add_option("--problem", data.problem, "logistic | ls")
      ->check(CLI::IsMember({"logistic", "ls"}))
      ->capture_default_str();
  app.add_flag("--header", data.header, "CSV has a header line");
  app.add_option("--max-rows", data.max_rows, "read at most this many CSV rows (0 = all)");
  app.add_option("--samples", data.samples, "synthetic sample count")->capture_default_str();
  app.add_option("--features", data.features, "synthetic feature count")->capture_default_str();
  app.add_option("--classes", data.classes, "synthetic class count")->capture_default_str();
  app.add_option("--data-seed", data.data_seed, "synthetic data and split seed")->capture_default_str();
  app.add_option("--batch", data.batch, "samples per component")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--train-fraction", data.train_fraction, "train share of the split (run)")
      ->capture_default_str();
  app.add_option("--p", data.p, "L-SVRG refresh probability (default 1/n)");
  app.add_flag("--project", data.project, "project onto a box centered at x1");
  app.add_option("--box-halfwidth", data.box_half_width, "box half-width")->capture_default_str();
  app.add_option("--gamma", data.params.gamma, "RMSprop discount")->capture_default_str();
  app.add_option("--beta1", data.params.beta1, "Adam momentum")->capture_default_str();
  app.add_option("--beta2", data.params.beta2, "Adam second-moment discount")->capture_default_str();

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "grid sweep writing the results CSV")->fallthrough();
  run_cmd->add_option("--algos", run_opts.algos, "comma list: " + [] {
    std::string s;
    for (const auto& n : algorithm_names()) s += (s.empty() ? "" : ",") + n;
    return s;
  }())->delimiter(',')->capture_default_str();
  run_cmd->add_option("--ltilde", run_opts.ltilde, "comma list; eta = 1/L-tilde")->delimiter(',')
      ->capture_default_str();
  run_cmd->add_option("--epochs", run_opts.epochs, "gradient budget in epochs")->capture_default_str();
  run_cmd->add_option("--seeds", run_opts.seeds, "comma list")->delimiter(',')->capture_default_str();
  run_cmd->add_option("--checkpoints-per-epoch", run_opts.checkpoints_per_epoch)->capture_default_str();
  run_cmd->add_option("--workers", run_opts.workers, "concurrent cells")->capture_default_str();
  run_cmd->add_option("--out", run_opts.out, "CSV path (default stdout)");

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "single run, prints checkpoints")->fallthrough();
  solve_cmd->add_option("--algo", solve_opts.algo)->capture_default_str();
  solve_cmd->add_option("--eta", solve_opts.eta)->capture_default_str();
  solve_cmd->add_option("--iterations", solve_opts.iterations, "T")->capture_default_str();
  solve_cmd->add_option("--seed", solve_opts.seed)->capture_default_str();
  solve_cmd->add_option("--stride", solve_opts.stride, "checkpoint stride (default T/10)");
  solve_cmd->add_flag("--print-x", solve_opts.print_x, "print the averaged iterate");

  double tol = 1e-10;
  std::size_t max_iterations = 20000;
  bool print_x = false;
  auto* ref_cmd = app.add_subcommand("reference", "compute x* and f*")->fallthrough();
  ref_cmd->add_option("--tol", tol, "gradient-norm tolerance")->capture_default_str();
  ref_cmd->add_option("--max-iterations", max_iterations)->capture_default_str();
  ref_cmd->add_flag("--print-x", print_x, "print x*");

  std::size_t verify_runs = 20;
  std::size_t verify_iterations = 500;
  double verify_eta = 1.0;
  auto* verify_cmd = app.add_subcommand("verify", "lemma checks on projected runs")->fallthrough();
  verify_cmd->add_option("--runs", verify_runs)->capture_default_str();
  verify_cmd->add_option("--iterations", verify_iterations, "T")->capture_default_str();
  verify_cmd->add_option("--eta", verify_eta)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(data, run_opts);
    if (*solve_cmd) return cmd_solve(data, solve_opts);
    if (*ref_cmd) return cmd_reference(data, tol, max_iterations, print_x);
    if (*verify_cmd) return cmd_verify(data, verify_runs, verify_iterations, verify_eta);
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
