#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"
#include "isopsm/parallel.hpp"
#include "isopsm/rng.hpp"

namespace isopsm {

/// Order-statistic quantile with linear interpolation between closest ranks
/// (the type-7 convention).
inline double percentile_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyInput("quantile of empty sample");
  for (double v : values)
    if (!std::isfinite(v)) throw NonFinite("quantile input must be finite");
  if (p < 0.0 || p > 1.0) throw DataError("quantile level must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

struct BootstrapReport {
  double point_estimate = 0.0;
  std::vector<double> replicates;  // successful replicates, sorted
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double mean = 0.0;
  int b = 0;               // requested replicate count
  int failed = 0;          // skipped replicates (degenerate resamples etc.)
  std::uint64_t seed = 0;
};

namespace detail {

constexpr std::uint64_t kBootstrapStream = 0xB007;

inline ObservationSet resample(const ObservationSet& data,
                               const std::vector<Eigen::Index>& idx) {
  const Eigen::Index n = data.n();
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, data.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = data.y[idx[static_cast<std::size_t>(i)]];
    d[i] = data.d[idx[static_cast<std::size_t>(i)]];
    x.row(i) = data.x.row(idx[static_cast<std::size_t>(i)]);
  }
  return make_observation_set(std::move(y), std::move(d), std::move(x));
}

}  // namespace detail

/// Draws the unit indices of bootstrap replicate r.  Exposed so tests can
/// reason about the index stream directly; the stream depends only on
/// (seed, r), never on thread scheduling.
inline std::vector<Eigen::Index> bootstrap_indices(Eigen::Index n,
                                                   std::uint64_t seed, int r) {
  std::mt19937_64 gen = make_stream(
      seed, {detail::kBootstrapStream, static_cast<std::uint64_t>(r)});
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (auto& v : idx) v = pick(gen);
  return idx;
}

/// Nonparametric bootstrap of a full estimation pipeline: B i.i.d.
/// with-replacement resamples of the units, the pipeline re-run on each.
/// Replicates that fail (a resample can lose an arm) are skipped and
/// counted; more than 5% failures aborts.  Replicates run in parallel and
/// are aggregated in replicate order, so reports are reproducible bit for
/// bit given (seed, B).
template <class Estimator>
BootstrapReport bootstrap(const ObservationSet& data, Estimator&& estimator,
                          int b, std::uint64_t seed) {
  if (b < 2) throw DataError("bootstrap needs B >= 2");
  BootstrapReport report;
  report.b = b;
  report.seed = seed;
  report.point_estimate = estimator(data);

  std::vector<std::optional<double>> slots(static_cast<std::size_t>(b));
  parallel_for(static_cast<std::size_t>(b), [&](std::size_t r) {
    try {
      ObservationSet sample = detail::resample(
          data, bootstrap_indices(data.n(), seed, static_cast<int>(r)));
      const double value = estimator(sample);
      if (!std::isfinite(value)) return;  // counts as failed
      slots[r] = value;
    } catch (const Error&) {
      // failed replicate, counted below
    }
  });

  report.replicates.reserve(slots.size());
  for (const auto& slot : slots) {
    if (slot)
      report.replicates.push_back(*slot);
    else
      ++report.failed;
  }
  if (report.failed * 20 > b)
    throw AllReplicatesFailed(std::to_string(report.failed) + " of " +
                              std::to_string(b) + " bootstrap replicates failed");
  std::sort(report.replicates.begin(), report.replicates.end());

  const double m = static_cast<double>(report.replicates.size());
  double mean = 0.0;
  for (double v : report.replicates) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : report.replicates) ss += (v - mean) * (v - mean);
  report.mean = mean;
  report.sd = m > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  report.q025 = percentile_quantile(report.replicates, 0.025);
  report.q975 = percentile_quantile(report.replicates, 0.975);
  return report;
}

}  // namespace isopsm
