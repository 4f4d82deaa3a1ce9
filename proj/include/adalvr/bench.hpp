#ifndef ADALVR_BENCH_HPP
#define ADALVR_BENCH_HPP

#include "adalvr/core.hpp"
#include "adalvr/dataset.hpp"
#include "adalvr/optimizer.hpp"
#include "adalvr/problem.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace adalvr {

struct Algorithm {
  std::string name;
  EstimatorKind estimator = EstimatorKind::saga;
  ScalingKind scaling = ScalingKind::constant;
};

namespace detail {

struct AlgorithmEntry {
  const char* name;
  EstimatorKind estimator;
  ScalingKind scaling;
};

inline constexpr AlgorithmEntry kAlgorithms[] = {
    {"SGD", EstimatorKind::sgd, ScalingKind::constant},
    {"GD", EstimatorKind::full_batch, ScalingKind::constant},
    {"SAGA", EstimatorKind::saga, ScalingKind::constant},
    {"L-SVRG", EstimatorKind::lsvrg, ScalingKind::constant},
    {"AdaGrad-Norm", EstimatorKind::sgd, ScalingKind::adagrad_norm},
    {"AdaGrad-Diag", EstimatorKind::sgd, ScalingKind::adagrad_diag},
    {"AdaSAGA-Norm", EstimatorKind::saga, ScalingKind::adagrad_norm},
    {"AdaSAGA-Diag", EstimatorKind::saga, ScalingKind::adagrad_diag},
    {"AdaLSVRG-Norm", EstimatorKind::lsvrg, ScalingKind::adagrad_norm},
    {"AdaLSVRG-Diag", EstimatorKind::lsvrg, ScalingKind::adagrad_diag},
    {"RMSprop", EstimatorKind::sgd, ScalingKind::rmsprop},
    {"RMSpropSAGA", EstimatorKind::saga, ScalingKind::rmsprop},
    {"RMSpropLSVRG", EstimatorKind::lsvrg, ScalingKind::rmsprop},
    {"Adam", EstimatorKind::sgd, ScalingKind::adam},
    {"AdamSAGA", EstimatorKind::saga, ScalingKind::adam},
    {"AdamLSVRG", EstimatorKind::lsvrg, ScalingKind::adam},
};

inline std::string fold(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != '-' && c != '_' && c != ' ')
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace detail

/// Looks up an algorithm by name ("AdaSAGA-Diag", "adasaga_diag", "SAGA",
/// ...); case, '-' and '_' are ignored.
inline Algorithm parse_algorithm(std::string_view name) {
  const std::string key = detail::fold(name);
  for (const auto& e : detail::kAlgorithms)
    if (detail::fold(e.name) == key) return {e.name, e.estimator, e.scaling};
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

inline std::vector<std::string> algorithm_names() {
  std::vector<std::string> out;
  for (const auto& e : detail::kAlgorithms) out.emplace_back(e.name);
  return out;
}

struct GridSpec {
  std::vector<Algorithm> algorithms;
  std::vector<double> ltilde;
  double epochs = 10.0;
  std::vector<std::uint64_t> seeds{0};
  std::size_t checkpoints_per_epoch = 4;
  ScalingParams params;
  std::optional<double> p;
  bool project = false;
  double box_half_width = 10.0;
  std::size_t workers = 1;

  void validate() const {
    if (algorithms.empty()) throw std::invalid_argument("grid needs at least one algorithm");
    if (ltilde.empty()) throw std::invalid_argument("grid needs at least one L-tilde value");
    for (double l : ltilde)
      if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("L-tilde must be > 0");
    if (seeds.empty()) throw std::invalid_argument("grid needs at least one seed");
    if (!(epochs > 0.0) || !std::isfinite(epochs)) throw std::invalid_argument("epochs must be > 0");
    if (checkpoints_per_epoch < 1) throw std::invalid_argument("checkpoints per epoch must be >= 1");
  }
};

struct ResultRow {
  std::string algorithm;
  double ltilde = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t gradients = 0;
  double epoch = 0.0;
  double train_objective = 0.0;
  std::optional<double> balanced_accuracy;
  bool diverged = false;

  bool operator==(const ResultRow&) const = default;
};

/// Mean per-class recall over the classes present in `labels`.
inline double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels,
                                int n_classes) {
  if (labels.empty()) throw std::invalid_argument("balanced accuracy of an empty sample");
  if (predictions.size() != labels.size())
    throw std::invalid_argument("predictions and labels differ in length");
  if (n_classes < 1) throw std::invalid_argument("class count must be >= 1");
  std::vector<std::size_t> support(static_cast<std::size_t>(n_classes), 0);
  std::vector<std::size_t> hits(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const int y = labels[s];
    if (y < 0 || y >= n_classes) throw std::invalid_argument("label outside [0, K)");
    ++support[static_cast<std::size_t>(y)];
    if (predictions[s] == y) ++hits[static_cast<std::size_t>(y)];
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] == 0) continue;
    sum += static_cast<double>(hits[k]) / static_cast<double>(support[k]);
    ++present;
  }
  return sum / present;
}

/// Gradient budget ceil(epochs * n) and checkpoint spacing of one cell.
struct Schedule {
  std::uint64_t budget = 0;
  std::uint64_t stride = 1;
  std::uint64_t checkpoints = 0;
  std::uint64_t threshold(std::uint64_t k) const { return std::min(k * stride, budget); }
};

inline Schedule make_schedule(const GridSpec& spec, std::size_t n) {
  Schedule s;
  s.budget = static_cast<std::uint64_t>(std::ceil(spec.epochs * static_cast<double>(n) - 1e-9));
  s.budget = std::max<std::uint64_t>(s.budget, 1);
  s.stride = std::max<std::uint64_t>(1, n / spec.checkpoints_per_epoch);
  s.checkpoints = (s.budget + s.stride - 1) / s.stride;
  return s;
}

/// One (algorithm, L-tilde, seed) cell. The step hyperparameter is
/// eta = 1 / L-tilde for every algorithm. A row is emitted each time the
/// gradient count reaches the next checkpoint; a non-finite objective or
/// iterate ends the cell with a single row flagged diverged.
inline std::vector<ResultRow> run_cell(const GridSpec& spec, const Algorithm& algo, double ltilde,
                                       std::uint64_t seed, const FiniteSumProblem& train,
                                       const Dataset* test) {
  const std::size_t n = train.components();
  const Vector x1 = Vector::Zero(static_cast<Eigen::Index>(train.dimension()));
  OptimizerConfig config;
  config.estimator = algo.estimator;
  config.scaling = algo.scaling;
  config.params = spec.params;
  config.eta = 1.0 / ltilde;
  config.p = spec.p;
  config.seed = seed;
  config.project = spec.project;
  if (spec.project) config.domain = Domain::centered_box(x1, spec.box_half_width);

  const Schedule schedule = make_schedule(spec, n);
  const bool classify = test != nullptr && train.kind() == ProblemKind::multinomial_logistic;
  const std::vector<int> test_labels = classify ? test->labels() : std::vector<int>{};

  std::vector<ResultRow> rows;
  auto base_row = [&](std::uint64_t gradients) {
    ResultRow r;
    r.algorithm = algo.name;
    r.ltilde = ltilde;
    r.seed = seed;
    r.gradients = gradients;
    r.epoch = static_cast<double>(gradients) / static_cast<double>(n);
    return r;
  };
  auto diverged_row = [&](std::uint64_t gradients) {
    ResultRow r = base_row(gradients);
    r.train_objective = std::numeric_limits<double>::quiet_NaN();
    r.diverged = true;
    rows.push_back(r);
  };

  AdaLVR opt(config, train, x1);
  std::uint64_t next = 1;
  // Returns false once the cell diverged.
  auto emit_ready = [&]() {
    while (next <= schedule.checkpoints && opt.gradients() >= schedule.threshold(next)) {
      ResultRow r = base_row(opt.gradients());
      r.train_objective = train.value(opt.iterate());
      if (!std::isfinite(r.train_objective)) {
        diverged_row(opt.gradients());
        return false;
      }
      if (classify) {
        const auto pred = train.predict(opt.iterate(), test->features);
        r.balanced_accuracy = balanced_accuracy(pred, test_labels, test->n_classes);
      }
      rows.push_back(std::move(r));
      ++next;
    }
    return true;
  };

  if (!emit_ready()) return rows;
  while (next <= schedule.checkpoints) {
    if (!opt.step()) {
      diverged_row(opt.gradients());
      break;
    }
    if (!emit_ready()) break;
  }
  return rows;
}

using RowSink = std::function<void(const std::vector<ResultRow>&)>;

/// Runs every (algorithm, L-tilde, seed) cell, up to spec.workers at a
/// time. Rows come back in canonical order (algorithm, then L-tilde, then
/// seed, then checkpoint) regardless of scheduling; `sink`, if given,
/// receives each cell's rows in that order as soon as its predecessors are
/// done.
inline std::vector<ResultRow> run_grid(const GridSpec& spec, const FiniteSumProblem& train,
                                       const Dataset* test = nullptr, const RowSink& sink = {}) {
  spec.validate();
  struct Cell {
    std::size_t algo, ltilde, seed;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < spec.algorithms.size(); ++a)
    for (std::size_t l = 0; l < spec.ltilde.size(); ++l)
      for (std::size_t s = 0; s < spec.seeds.size(); ++s) cells.push_back({a, l, s});

  std::vector<std::optional<std::vector<ResultRow>>> done(cells.size());
  std::vector<ResultRow> all;
  std::size_t flushed = 0;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&]() {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      std::vector<ResultRow> rows;
      try {
        rows = run_cell(spec, spec.algorithms[cells[c].algo], spec.ltilde[cells[c].ltilde],
                        spec.seeds[cells[c].seed], train, test);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
        return;
      }
      std::lock_guard lock(mutex);
      done[c] = std::move(rows);
      while (flushed < cells.size() && done[flushed]) {
        if (sink) sink(*done[flushed]);
        all.insert(all.end(), done[flushed]->begin(), done[flushed]->end());
        done[flushed]->clear();
        ++flushed;
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(spec.workers, 1, cells.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return all;
}

// CSV ---------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "algorithm,ltilde,seed,gradients,epoch,train_objective,balanced_accuracy,diverged";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

inline void write_csv_rows(std::ostream& out, const std::vector<ResultRow>& rows) {
  for (const auto& r : rows) {
    out << r.algorithm << ',' << format_double(r.ltilde) << ',' << r.seed << ',' << r.gradients
        << ',' << format_double(r.epoch) << ',';
    if (!r.diverged) out << format_double(r.train_objective);
    out << ',';
    if (r.balanced_accuracy && !r.diverged) out << format_double(*r.balanced_accuracy);
    out << ',' << (r.diverged ? 1 : 0) << '\n';
  }
  out.flush();
}

inline void emit_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  write_csv_header(out);
  write_csv_rows(out, rows);
}

/// Reads a results CSV written by emit_csv.
inline std::vector<ResultRow> parse_results_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != kCsvHeader)
    throw FormatError("results CSV header mismatch", 1);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(detail::trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 8) throw FormatError("expected 8 columns", line_no);
    auto number = [&](std::string_view cell, const char* column) {
      double v = 0.0;
      if (!detail::parse_double(cell, v))
        throw FormatError(std::string("bad value in column ") + column, line_no);
      return v;
    };
    auto integer = [&](std::string_view cell, const char* column) {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw FormatError(std::string("bad value in column ") + column, line_no);
      return v;
    };
    ResultRow r;
    r.algorithm = std::string(cells[0]);
    r.ltilde = number(cells[1], "ltilde");
    r.seed = integer(cells[2], "seed");
    r.gradients = integer(cells[3], "gradients");
    r.epoch = number(cells[4], "epoch");
    r.diverged = integer(cells[7], "diverged") != 0;
    if (r.diverged)
      r.train_objective = std::numeric_limits<double>::quiet_NaN();
    else
      r.train_objective = number(cells[5], "train_objective");
    if (!cells[6].empty()) r.balanced_accuracy = number(cells[6], "balanced_accuracy");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace adalvr

#endif  // ADALVR_BENCH_HPP
