#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"
#include "isopsm/estimators.hpp"
#include "isopsm/index.hpp"
#include "isopsm/link.hpp"
#include "isopsm/logistic.hpp"
#include "isopsm/parallel.hpp"
#include "isopsm/rng.hpp"

namespace isopsm {

/// Bivariate benchmark design: X1, X2, eps iid N(0,1),
///   pr(D=1 | x) = link(2 + x1 + x2),
///   Y(1) = -(x1 + x2)^a + eps,
///   Y(0) = 3 h(x1, x2) - (x1 + b x2)^a + eps,
/// with h = cos(x1 + b x2) under model 1 and h = x1 under model 2.
struct DgpConfig {
  int model = 1;  // 1 or 2
  int a = 1;      // 1 or 2
  int b = 1;      // 1, 0 or -1
  Link link = Link::Logistic;
  int n = 500;
  std::uint64_t seed = 1;
};

inline void validate_config(const DgpConfig& c) {
  if (c.model != 1 && c.model != 2) throw DataError("model must be 1 or 2");
  if (c.a != 1 && c.a != 2) throw DataError("a must be 1 or 2");
  if (c.b != 1 && c.b != 0 && c.b != -1) throw DataError("b must be 1, 0 or -1");
  if (c.n < 10) throw DataError("n must be >= 10");
}

inline std::uint64_t config_key(const DgpConfig& c) {
  return static_cast<std::uint64_t>(c.model) * 1000003ULL +
         static_cast<std::uint64_t>(c.a) * 10007ULL +
         static_cast<std::uint64_t>(c.b + 2) * 101ULL +
         (c.link == Link::Probit ? 13ULL : 7ULL) +
         static_cast<std::uint64_t>(c.n) * 29ULL;
}

// identifies the population (sample size does not enter)
inline std::uint64_t population_key(const DgpConfig& c) {
  DgpConfig base = c;
  base.n = 500;
  return config_key(base);
}

/// Angle (radians) between the control-outcome index direction (1, b) and
/// the propensity direction (1, 1), reported as study metadata.  Chord form:
/// well conditioned near zero angle.
inline double outcome_angle_rad(int b) {
  const double nb = std::sqrt(1.0 + double(b) * double(b));
  const double s = 1.0 / std::sqrt(2.0);
  const double dx = 1.0 / nb - s;
  const double dy = double(b) / nb - s;
  const double chord = std::sqrt(dx * dx + dy * dy);
  return 2.0 * std::asin(std::clamp(chord / 2.0, 0.0, 1.0));
}

struct SimulatedSample {
  ObservationSet data;
  Eigen::VectorXd y1;          // potential outcomes, kept for oracles
  Eigen::VectorXd y0;
  Eigen::VectorXd propensity;  // true pr(D=1 | x)
};

namespace detail {

// E[Y(1) - Y(0) | X]: -(x1+x2)^a - 3 h + (x1 + b x2)^a
inline double effect_at(int model, int a, int b, double x1, double x2) {
  const double s1 = x1 + x2;
  const double s0 = x1 + b * x2;
  const double h = model == 1 ? std::cos(s0) : x1;
  const double power_part = a == 1 ? (-s1 + s0) : (-s1 * s1 + s0 * s0);
  return power_part - 3.0 * h;
}

constexpr std::uint64_t kGenerateStream = 0xD47A;
constexpr std::uint64_t kOracleStream = 0x0AC1E;
constexpr std::uint64_t kVarianceStream = 0x516A;

}  // namespace detail

/// Draws one sample from the design.  Per-unit draw order is fixed
/// (x1, x2, u, eps1, eps0), so the output is a pure function of the seed.
inline SimulatedSample generate(const DgpConfig& config) {
  validate_config(config);
  std::mt19937_64 gen = make_stream(config.seed, {detail::kGenerateStream});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const Eigen::Index n = config.n;
  Eigen::VectorXd y(n), y1(n), y0(n), p(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = normal(gen);
    const double x2 = normal(gen);
    p[i] = link_cdf(config.link, 2.0 + x1 + x2);
    d[i] = unif(gen) < p[i] ? 1 : 0;
    const double eps1 = normal(gen);
    const double eps0 = normal(gen);
    const double s1 = x1 + x2;
    const double s0 = x1 + config.b * x2;
    const double h = config.model == 1 ? std::cos(s0) : x1;
    y1[i] = (config.a == 1 ? -s1 : -s1 * s1) + eps1;
    y0[i] = 3.0 * h - (config.a == 1 ? s0 : s0 * s0) + eps0;
    y[i] = d[i] == 1 ? y1[i] : y0[i];
    x(i, 0) = x1;
    x(i, 1) = x2;
  }
  return SimulatedSample{
      make_observation_set(std::move(y), std::move(d), std::move(x)),
      std::move(y1), std::move(y0), std::move(p)};
}

struct OracleValue {
  double value = 0.0;
  double se = 0.0;
};

/// Ground-truth ATT tau = E{Y(1) - Y(0) | D = 1} by Monte Carlo integration:
/// the noise-free effect averaged over the covariate law weighted by the
/// true propensity.  SE by the ratio-estimator delta method.  Results are
/// memoized per (population, oracle_n, oracle_seed).
inline OracleValue true_att(const DgpConfig& config, std::int64_t oracle_n,
                            std::uint64_t oracle_seed = 0x0C0FFEEULL) {
  validate_config(config);
  if (oracle_n < 1000) throw DataError("oracle_n too small");

  static std::mutex cache_mutex;
  static std::map<std::tuple<std::uint64_t, std::int64_t, std::uint64_t>,
                  OracleValue>
      cache;
  const auto key = std::make_tuple(population_key(config), oracle_n, oracle_seed);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }

  const std::int64_t chunk = 1 << 18;
  const std::int64_t n_chunks = (oracle_n + chunk - 1) / chunk;
  std::vector<std::array<double, 2>> sums(static_cast<std::size_t>(n_chunks));
  auto sweep = [&](std::size_t c, auto&& accumulate) {
    std::mt19937_64 gen = make_stream(
        oracle_seed, {detail::kOracleStream, population_key(config),
                      static_cast<std::uint64_t>(c)});
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::int64_t lo = static_cast<std::int64_t>(c) * chunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + chunk, oracle_n);
    for (std::int64_t i = lo; i < hi; ++i) {
      const double x1 = normal(gen);
      const double x2 = normal(gen);
      const double m = detail::effect_at(config.model, config.a, config.b, x1, x2);
      const double w = link_cdf(config.link, 2.0 + x1 + x2);
      accumulate(m, w);
    }
  };

  parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t c) {
    double sw = 0.0, swm = 0.0;
    sweep(c, [&](double m, double w) {
      sw += w;
      swm += w * m;
    });
    sums[c] = {sw, swm};
  });
  double sw = 0.0, swm = 0.0;
  for (const auto& s : sums) {
    sw += s[0];
    swm += s[1];
  }
  const double tau = swm / sw;

  // second pass over the identical stream for the delta-method SE
  std::vector<double> sq(static_cast<std::size_t>(n_chunks));
  parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t c) {
    double acc = 0.0;
    sweep(c, [&](double m, double w) { acc += w * w * (m - tau) * (m - tau); });
    sq[c] = acc;
  });
  double ss = 0.0;
  for (double v : sq) ss += v;

  const OracleValue result{tau, std::sqrt(ss) / sw};
  std::lock_guard<std::mutex> lock(cache_mutex);
  cache[key] = result;
  return result;
}

enum class SimEstimatorKind { PavaMle, PavaSse, Para, Psm };

struct SimEstimator {
  SimEstimatorKind kind = SimEstimatorKind::PavaMle;
  int m = 0;  // matches per treated unit, PSM only

  std::string name() const {
    switch (kind) {
      case SimEstimatorKind::PavaMle: return "PAVA-MLE";
      case SimEstimatorKind::PavaSse: return "PAVA-SSE";
      case SimEstimatorKind::Para: return "PARA";
      default: return "PSM-" + std::to_string(m);
    }
  }
};

inline std::vector<SimEstimator> default_estimators() {
  return {{SimEstimatorKind::PavaMle, 0}, {SimEstimatorKind::PavaSse, 0},
          {SimEstimatorKind::Para, 0},    {SimEstimatorKind::Psm, 3},
          {SimEstimatorKind::Psm, 5},     {SimEstimatorKind::Psm, 10},
          {SimEstimatorKind::Psm, 15}};
}

/// ATT estimates of the requested estimators on one sample.  The logistic
/// fit is shared by PAVA-MLE, PARA and PSM; failures surface per estimator
/// as empty slots.
inline std::vector<std::optional<double>> evaluate_estimators(
    const ObservationSet& data, const std::vector<SimEstimator>& estimators,
    const SseOptions& sse_opts = {}) {
  std::vector<std::optional<double>> out(estimators.size());

  std::optional<LogisticFit> logit;
  auto logistic_fit = [&]() -> const LogisticFit& {
    if (!logit) logit = fit_logistic(data);
    return *logit;
  };
  std::optional<IndexFit> sse;
  auto sse_index = [&]() -> const IndexFit& {
    if (!sse) sse = sse_fit(data, sse_opts);
    return *sse;
  };

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    try {
      switch (estimators[e].kind) {
        case SimEstimatorKind::PavaMle: {
          Eigen::VectorXd slopes = logistic_fit().slopes();
          const double norm = slopes.norm();
          if (!(norm > 1e-12)) throw NonConvergence("zero slope");
          slopes /= norm;
          detail::apply_sign_convention(slopes);
          IndexFit index{slopes, IndexMethod::LogisticMle, true, {}};
          out[e] =
              multivariate_pava_estimators(data, index, EffectTarget::Att).value;
          break;
        }
        case SimEstimatorKind::PavaSse:
          out[e] =
              multivariate_pava_estimators(data, sse_index(), EffectTarget::Att)
                  .value;
          break;
        case SimEstimatorKind::Para:
          out[e] = para_estimators(
                       data, [](double t) { return logistic_cdf(t); },
                       logistic_fit(), EffectTarget::Att)
                       .value;
          break;
        case SimEstimatorKind::Psm:
          out[e] = psm_m_att(data, fitted_propensity(logistic_fit(), data.x),
                             estimators[e].m)
                       .value;
          break;
      }
    } catch (const Error&) {
      out[e] = std::nullopt;
    }
  }
  return out;
}

struct McCell {
  DgpConfig config;
  std::string estimator;
  double bias = 0.0;
  double rmse = 0.0;
  double bias_se = 0.0;
  double rmse_se = 0.0;
  int reps = 0;    // successful replicates
  int failed = 0;
  double true_att = 0.0;
  double true_att_se = 0.0;
  double outcome_angle = 0.0;  // radians
};

struct McReport {
  int reps = 0;
  std::uint64_t master_seed = 0;
  std::int64_t oracle_n = 0;
  std::vector<McCell> cells;
};

/// Monte Carlo study: R replicates per configuration, every estimator on
/// every replicate.  Replicate r of config c draws from a stream keyed by
/// (master_seed, config, r); cells aggregate in replicate order, so the
/// report is bitwise reproducible under any thread count.
inline McReport run_study(const std::vector<DgpConfig>& configs,
                          const std::vector<SimEstimator>& estimators, int reps,
                          std::uint64_t master_seed,
                          std::int64_t oracle_n = 10000000,
                          const SseOptions& sse_opts = {}) {
  if (reps < 2) throw DataError("run_study needs R >= 2");
  for (const DgpConfig& c : configs) validate_config(c);

  McReport report;
  report.reps = reps;
  report.master_seed = master_seed;
  report.oracle_n = oracle_n;

  const std::size_t n_est = estimators.size();
  const std::size_t n_cfg = configs.size();
  std::vector<double> values(n_cfg * static_cast<std::size_t>(reps) * n_est,
                             std::numeric_limits<double>::quiet_NaN());
  parallel_for(n_cfg * static_cast<std::size_t>(reps), [&](std::size_t task) {
    const std::size_t ci = task / static_cast<std::size_t>(reps);
    const int r = static_cast<int>(task % static_cast<std::size_t>(reps));
    DgpConfig cfg = configs[ci];
    cfg.seed =
        derive_seed(master_seed, {config_key(cfg), static_cast<std::uint64_t>(r)});
    const SimulatedSample sample = generate(cfg);
    const auto vals = evaluate_estimators(sample.data, estimators, sse_opts);
    for (std::size_t e = 0; e < n_est; ++e)
      if (vals[e]) values[task * n_est + e] = *vals[e];
  });

  for (std::size_t ci = 0; ci < n_cfg; ++ci) {
    const OracleValue truth = true_att(configs[ci], oracle_n);
    for (std::size_t e = 0; e < n_est; ++e) {
      McCell cell;
      cell.config = configs[ci];
      cell.estimator = estimators[e].name();
      cell.true_att = truth.value;
      cell.true_att_se = truth.se;
      cell.outcome_angle = outcome_angle_rad(configs[ci].b);
      double sum = 0.0, sumsq = 0.0, sumq4 = 0.0;
      int used = 0;
      for (int r = 0; r < reps; ++r) {
        const double v =
            values[(ci * static_cast<std::size_t>(reps) +
                    static_cast<std::size_t>(r)) *
                       n_est +
                   e];
        if (std::isnan(v)) {
          ++cell.failed;
          continue;
        }
        const double err = v - truth.value;
        sum += err;
        sumsq += err * err;
        sumq4 += err * err * err * err;
        ++used;
      }
      cell.reps = used;
      if (used > 0) {
        cell.bias = sum / used;
        cell.rmse = std::sqrt(sumsq / used);
        const double var = std::max(0.0, sumsq / used - cell.bias * cell.bias);
        cell.bias_se = std::sqrt(var / used);
        const double var_sq =
            std::max(0.0, sumq4 / used - (sumsq / used) * (sumsq / used));
        cell.rmse_se = cell.rmse > 0.0
                           ? std::sqrt(var_sq / used) / (2.0 * cell.rmse)
                           : 0.0;
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

enum class VarianceKind { SigmaMu, SigmaTau };

/// Monte Carlo evaluation of the large-sample variance expressions
///   sigma_mu^2  = E{sigma1^2(X)/pi(X)} + Var{mu1(X)}
///   sigma_tau^2 = (1/eta^2) E[pi (tau(X)-tau)^2 + pi sigma1^2
///                             + pi^2/(1-pi) sigma0^2]
/// on the benchmark design, where every component is closed form
/// (sigma0 = sigma1 = 1, eta = E[pi]).  Valid only for b = 1 under the
/// logistic link: for b != 1 the control outcome leaves the propensity
/// direction, and under the probit link the 1/pi and pi^2/(1-pi) moments
/// diverge on the Gaussian design.  SE from batch means.
inline OracleValue asymptotic_variance_oracle(const DgpConfig& config,
                                              VarianceKind kind,
                                              std::int64_t oracle_n,
                                              std::uint64_t oracle_seed = 0x0C0FFEEULL) {
  validate_config(config);
  if (config.b != 1)
    throw NotApplicable(
        "variance formulas require the outcome index to equal the propensity "
        "direction (b = 1)");
  if (config.link != Link::Logistic)
    throw NotApplicable(
        "variance integrands are not integrable under the probit link on this "
        "design");
  if (oracle_n < 1000) throw DataError("oracle_n too small");

  const OracleValue tau = kind == VarianceKind::SigmaTau
                              ? true_att(config, oracle_n, oracle_seed)
                              : OracleValue{};

  const std::int64_t chunk = 1 << 18;
  const std::int64_t n_chunks = (oracle_n + chunk - 1) / chunk;
  struct ChunkSums {
    double eta = 0.0;
    double main = 0.0;
    double mu = 0.0;
    double musq = 0.0;
    std::int64_t len = 0;
  };
  std::vector<ChunkSums> sums(static_cast<std::size_t>(n_chunks));
  parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t c) {
    std::mt19937_64 gen = make_stream(
        oracle_seed, {detail::kVarianceStream, population_key(config),
                      static_cast<std::uint64_t>(c)});
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::int64_t lo = static_cast<std::int64_t>(c) * chunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + chunk, oracle_n);
    ChunkSums s;
    s.len = hi - lo;
    for (std::int64_t i = lo; i < hi; ++i) {
      const double x1 = normal(gen);
      const double x2 = normal(gen);
      const double pi = link_cdf(config.link, 2.0 + x1 + x2);
      if (kind == VarianceKind::SigmaMu) {
        const double s1 = x1 + x2;
        const double mu1 = config.a == 1 ? -s1 : -s1 * s1;
        s.main += 1.0 / pi;
        s.mu += mu1;
        s.musq += mu1 * mu1;
      } else {
        const double tau_x =
            detail::effect_at(config.model, config.a, config.b, x1, x2);
        const double dev = tau_x - tau.value;
        s.main += pi * dev * dev + pi + pi * pi / (1.0 - pi);
        s.eta += pi;
      }
    }
    sums[c] = s;
  });

  ChunkSums total;
  for (const auto& s : sums) {
    total.eta += s.eta;
    total.main += s.main;
    total.mu += s.mu;
    total.musq += s.musq;
    total.len += s.len;
  }
  const double n = static_cast<double>(total.len);

  double value = 0.0;
  auto chunk_value = [&](const ChunkSums& s) {
    const double len = static_cast<double>(s.len);
    if (kind == VarianceKind::SigmaMu) {
      const double mean_mu = total.mu / n;  // plug-in: center from all draws
      return s.main / len + s.musq / len - 2.0 * mean_mu * (s.mu / len) +
             mean_mu * mean_mu;
    }
    const double eta = total.eta / n;
    return (s.main / len) / (eta * eta);
  };
  value = chunk_value(total);

  double batch_ss = 0.0;
  for (const auto& s : sums) {
    const double dv = chunk_value(s) - value;
    batch_ss += dv * dv;
  }
  const double se =
      n_chunks > 1
          ? std::sqrt(batch_ss / (static_cast<double>(n_chunks) *
                                  static_cast<double>(n_chunks - 1)))
          : 0.0;
  return OracleValue{value, se};
}

}  // namespace isopsm
