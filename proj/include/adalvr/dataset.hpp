#ifndef ADALVR_DATASET_HPP
#define ADALVR_DATASET_HPP

#include "adalvr/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adalvr {

enum class Task { classification, regression };

/// Samples in rows. For classification `targets` holds integer class
/// indices in [0, n_classes); for regression real targets and
/// n_classes == 0.
struct Dataset {
  Matrix features;
  Vector targets;
  Task task = Task::classification;
  int n_classes = 0;

  std::size_t n_samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }
  int label(std::size_t i) const { return static_cast<int>(targets[static_cast<Eigen::Index>(i)]); }

  std::vector<int> labels() const {
    std::vector<int> out(n_samples());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = label(i);
    return out;
  }

  /// Throws std::invalid_argument if an invariant is broken.
  void validate() const {
    if (features.rows() < 1 || features.cols() < 1)
      throw std::invalid_argument("dataset needs at least one sample and one feature");
    if (targets.size() != features.rows())
      throw std::invalid_argument("targets length does not match sample count");
    if (!features.allFinite()) throw std::invalid_argument("non-finite feature value");
    if (!targets.allFinite()) throw std::invalid_argument("non-finite target");
    if (task == Task::classification) {
      if (n_classes < 1) throw std::invalid_argument("classification needs n_classes >= 1");
      for (Eigen::Index i = 0; i < targets.size(); ++i) {
        const double y = targets[i];
        if (y != std::floor(y) || y < 0 || y >= n_classes)
          throw std::invalid_argument("class label out of range at sample " +
                                      std::to_string(i));
      }
    }
  }
};

inline Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.task = data.task;
  out.n_classes = data.n_classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    out.features.row(static_cast<Eigen::Index>(r)) = data.features.row(src);
    out.targets[static_cast<Eigen::Index>(r)] = data.targets[src];
  }
  return out;
}

struct CsvOptions {
  bool header = false;
  Task task = Task::classification;
  std::size_t max_rows = 0;  // 0 = all
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view cell, double& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace detail

/// Parses comma-separated numeric rows; the last column is the label.
inline Dataset parse_csv(std::istream& in, const CsvOptions& options = {}) {
  std::vector<double> values;
  std::size_t columns = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::vector<std::size_t> row_lines;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && options.header) continue;
    if (detail::trim(line).empty()) continue;
    if (options.max_rows && rows == options.max_rows) break;
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto cell = rest.substr(0, comma);
      double v = 0.0;
      if (!detail::parse_double(cell, v))
        throw FormatError("non-numeric cell '" + std::string(detail::trim(cell)) +
                              "' in row " + std::to_string(rows + 1) + ", column " +
                              std::to_string(count + 1),
                          line_no);
      if (!std::isfinite(v))
        throw FormatError("non-finite value in row " + std::to_string(rows + 1), line_no);
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (columns == 0) {
      if (count < 2) throw FormatError("need at least one feature and a label column", line_no);
      columns = count;
    } else if (count != columns) {
      throw FormatError("expected " + std::to_string(columns) + " columns, found " +
                            std::to_string(count),
                        line_no);
    }
    row_lines.push_back(line_no);
    ++rows;
  }
  if (rows == 0) throw FormatError("no data rows", 0);

  Dataset data;
  data.task = options.task;
  const auto n = static_cast<Eigen::Index>(rows);
  const auto p = static_cast<Eigen::Index>(columns - 1);
  data.features.resize(n, p);
  data.targets.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < p; ++c)
      data.features(r, c) = values[static_cast<std::size_t>(r * (p + 1) + c)];
    data.targets[r] = values[static_cast<std::size_t>(r * (p + 1) + p)];
  }
  if (data.task == Task::classification) {
    int max_label = -1;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double y = data.targets[r];
      if (y != std::floor(y) || y < 0)
        throw FormatError("class label must be a nonnegative integer in row " +
                              std::to_string(r + 1),
                          row_lines[static_cast<std::size_t>(r)]);
      max_label = std::max(max_label, static_cast<int>(y));
    }
    data.n_classes = max_label + 1;
  }
  return data;
}

inline Dataset load_dataset(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset file '" + path + "'", 0);
  return parse_csv(in, options);
}

/// Maps each feature column affinely onto [0, 1]; constant columns become 0.
inline Dataset minmax_scale(Dataset data) {
  for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
    auto col = data.features.col(c);
    const double lo = col.minCoeff();
    const double range = col.maxCoeff() - lo;
    if (range > 0.0)
      col = (col.array() - lo) / range;
    else
      col.setZero();
  }
  return data;
}

/// Seeded shuffle split: the train part gets ceil(fraction * n) samples.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                                    double train_fraction,
                                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  const std::size_t n = data.n_samples();
  const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  if (n_train == 0 || n_train >= n)
    throw std::invalid_argument("split leaves an empty side for " + std::to_string(n) + " samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {select_rows(data, train), select_rows(data, test)};
}

// Synthetic generators ------------------------------------------------------

struct LogisticDataSpec {
  std::size_t n_samples = 2000;
  std::size_t n_features = 20;
  int n_classes = 5;
  // Feature j is drawn from U[0, feature_scales[j]]; empty means all 1.
  std::vector<double> feature_scales;
  double signal = 8.0;        // logit scale of the planted separator
  double label_noise = 0.05;  // probability of replacing a label by a uniform draw
  std::uint64_t seed = 1;
};

struct SyntheticData {
  Dataset data;
  Vector planted;  // class-major K x p parameter, empty for none
};

/// Planted multinomial model: class k is tied to feature k mod p, with its
/// weight rescaled by 1/scale so classes stay balanced under any feature
/// scaling. Labels are the planted argmax, replaced by a uniform class with
/// probability label_noise (which keeps the data non-separable).
inline SyntheticData make_logistic_data(const LogisticDataSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.n_samples);
  const auto p = static_cast<Eigen::Index>(spec.n_features);
  const int K = spec.n_classes;
  if (n < 1 || p < 1 || K < 2) throw std::invalid_argument("bad synthetic logistic shape");
  std::vector<double> scales = spec.feature_scales;
  if (scales.empty()) scales.assign(spec.n_features, 1.0);
  if (scales.size() != spec.n_features) throw std::invalid_argument("feature_scales size mismatch");
  for (double s : scales)
    if (!(s > 0.0)) throw std::invalid_argument("feature scales must be positive");

  CounterRng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix weights(K, p);
  for (int k = 0; k < K; ++k)
    for (Eigen::Index j = 0; j < p; ++j) {
      double w = 0.1 * normal(rng);
      if (j == k % p) w += 1.0;
      weights(k, j) = spec.signal * w / scales[static_cast<std::size_t>(j)];
    }

  SyntheticData out;
  out.data.task = Task::classification;
  out.data.n_classes = K;
  out.data.features.resize(n, p);
  out.data.targets.resize(n);
  Vector logits(K);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j)
      out.data.features(i, j) = scales[static_cast<std::size_t>(j)] * rng.uniform01();
    logits.noalias() = weights * out.data.features.row(i).transpose();
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < K; ++k)
      if (logits[k] > logits[best]) best = k;
    if (rng.bernoulli(spec.label_noise))
      best = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(K)));
    out.data.targets[i] = static_cast<double>(best);
  }
  out.planted = Eigen::Map<const Vector>(weights.data(), K * p);
  return out;
}

struct LeastSquaresDataSpec {
  std::size_t n_samples = 2000;
  std::size_t n_features = 20;
  std::vector<double> feature_scales;
  double noise = 0.1;
  std::uint64_t seed = 1;
};

inline SyntheticData make_least_squares_data(const LeastSquaresDataSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.n_samples);
  const auto p = static_cast<Eigen::Index>(spec.n_features);
  if (n < 1 || p < 1) throw std::invalid_argument("bad synthetic least-squares shape");
  std::vector<double> scales = spec.feature_scales;
  if (scales.empty()) scales.assign(spec.n_features, 1.0);
  if (scales.size() != spec.n_features) throw std::invalid_argument("feature_scales size mismatch");

  CounterRng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SyntheticData out;
  out.planted.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) out.planted[j] = normal(rng);
  out.data.task = Task::regression;
  out.data.features.resize(n, p);
  out.data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j)
      out.data.features(i, j) = scales[static_cast<std::size_t>(j)] * normal(rng);
    out.data.targets[i] = out.data.features.row(i).dot(out.planted) + spec.noise * normal(rng);
  }
  return out;
}

}  // namespace adalvr

#endif  // ADALVR_DATASET_HPP
