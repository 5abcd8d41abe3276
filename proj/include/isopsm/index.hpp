#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"
#include "isopsm/logistic.hpp"
#include "isopsm/nelder_mead.hpp"
#include "isopsm/pava.hpp"
#include "isopsm/spherical.hpp"

namespace isopsm {

enum class IndexMethod { LogisticMle, Sse, Supplied };

inline std::string index_method_name(IndexMethod m) {
  switch (m) {
    case IndexMethod::LogisticMle: return "LOGISTIC-MLE";
    case IndexMethod::Sse: return "SSE";
    default: return "SUPPLIED";
  }
}

/// Estimated unit-norm index direction.  Identification convention: the
/// first component larger than 1e-12 in magnitude is positive.
struct IndexFit {
  Eigen::VectorXd beta;
  IndexMethod method = IndexMethod::Supplied;
  bool converged = true;
  std::vector<double> objective_trace;  // per-start final objectives (SSE)
};

namespace detail {

inline void apply_sign_convention(Eigen::VectorXd& beta) {
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (std::abs(beta[i]) > 1e-12) {
      if (beta[i] < 0.0) beta = -beta;
      return;
    }
  }
}

}  // namespace detail

inline IndexFit supplied_index(Eigen::VectorXd beta) {
  const double norm = beta.norm();
  if (!(norm > 0.0) || !beta.allFinite())
    throw NonFinite("supplied index must be a finite nonzero vector");
  beta /= norm;
  detail::apply_sign_convention(beta);
  return IndexFit{std::move(beta), IndexMethod::Supplied, true, {}};
}

/// Index direction from the logistic MLE of D on (1, X): the slope vector
/// normalized to unit length.  The intercept is dropped; the unknown
/// monotone link absorbs it.  With a single covariate the direction is fixed
/// at (1) and the univariate pipeline applies as-is.
inline IndexFit logistic_mle(const ObservationSet& data,
                             const LogisticOptions& opts = {}) {
  if (data.dim() == 1)
    return IndexFit{Eigen::VectorXd::Ones(1), IndexMethod::LogisticMle, true, {}};
  LogisticFit fit = fit_logistic(data, opts);
  Eigen::VectorXd beta = fit.slopes();
  const double norm = beta.norm();
  if (!(norm > 1e-12))
    throw NonConvergence("logistic slope vanishes; index direction undefined");
  beta /= norm;
  detail::apply_sign_convention(beta);
  return IndexFit{std::move(beta), IndexMethod::LogisticMle, fit.converged, {}};
}

/// Empirical score of the simple score estimator at angles zeta:
///   phi_n(zeta) = mean_i J(zeta)' X_i (D_i - pihat_gamma(X_i' gamma)),
/// where gamma = S(zeta) and pihat_gamma is the PAVA fit of D along X gamma.
inline Eigen::VectorXd sse_objective(const ObservationSet& data,
                                     const SphericalPoint& zeta) {
  if (data.dim() < 2) throw DataError("sse_objective needs dim >= 2");
  if (zeta.dim() != data.dim())
    throw DimensionMismatch("angle dimension must be dim - 1");
  const Eigen::VectorXd gamma = spherical_map(zeta);
  const StepPropensity step = fit_step_propensity(data, data.x * gamma);
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(data.dim());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::Index unit = step.perm.order[static_cast<std::size_t>(i)];
    accum += data.x.row(unit).transpose() *
             (static_cast<double>(data.d[unit]) - step.fitted[i]);
  }
  accum /= static_cast<double>(data.n());
  return spherical_jacobian(zeta).transpose() * accum;
}

struct SseOptions {
  int n_starts = 10;            // logistic-MLE warm start + quasi-random points
  double crossing_scale = 1.0;  // accept |phi_n| <= crossing_scale / sqrt(n)
  NelderMeadOptions nm{};
};

/// Deterministic low-discrepancy start angles (Kronecker sequence on the
/// angle box), used to complement the warm start.
inline std::vector<SphericalPoint> default_sse_starts(const ObservationSet& data,
                                                      const SseOptions& opts) {
  std::vector<SphericalPoint> starts;
  const Eigen::Index m = data.dim() - 1;
  try {
    IndexFit warm = logistic_mle(data);
    starts.push_back(angles_from_direction(warm.beta));
  } catch (const Error&) {
    // fall through to quasi-random starts only
  }
  static const double alphas[] = {0.7548776662466927, 0.5698402909980532,
                                  0.3287702148444711, 0.8191725133961645,
                                  0.2548607878987686, 0.6394267984578837,
                                  0.0250819893721895, 0.4753006283895967};
  int want = std::max(1, opts.n_starts) - static_cast<int>(starts.size());
  for (int s = 1; s <= want; ++s) {
    SphericalPoint p;
    p.zeta.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      double frac = std::fmod(static_cast<double>(s) * alphas[j % 8] +
                                  0.5 * static_cast<double>(j),
                              1.0);
      p.zeta[j] = (j + 1 < m) ? frac * kPi : frac * kTwoPi;
    }
    starts.push_back(std::move(p));
  }
  return starts;
}

/// Simple score estimator: finds an approximate zero-crossing of phi_n by
/// minimizing |phi_n|^2 with multistart Nelder-Mead (the objective changes
/// in discrete PAVA refits, so gradient methods do not apply).  The best
/// minimizer across starts wins; ties break on start order.  `converged`
/// records whether |phi_n| fell below crossing_scale * n^{-1/2}.
inline IndexFit sse_fit(const ObservationSet& data,
                        const std::vector<SphericalPoint>& starts,
                        const SseOptions& opts = {}) {
  if (data.dim() == 1)
    return IndexFit{Eigen::VectorXd::Ones(1), IndexMethod::Sse, true, {}};
  if (starts.empty()) throw DataError("sse_fit needs at least one start");

  auto objective = [&](const Eigen::VectorXd& z) {
    return sse_objective(data, SphericalPoint{z}).squaredNorm();
  };

  IndexFit fit;
  fit.method = IndexMethod::Sse;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_zeta;
  bool any_descent = false;
  for (const SphericalPoint& start : starts) {
    const double f0 = objective(start.zeta);
    NelderMeadResult r = nelder_mead(objective, start.zeta, opts.nm);
    fit.objective_trace.push_back(r.value);
    if (r.value < f0) any_descent = true;
    if (r.value < best) {
      best = r.value;
      best_zeta = r.x;
    }
  }
  const double tol = opts.crossing_scale / std::sqrt(static_cast<double>(data.n()));
  if (!any_descent && !(std::sqrt(best) <= tol))
    throw NoDescent("no start reduced the score norm");

  fit.converged = std::sqrt(best) <= tol;
  fit.beta = spherical_map(SphericalPoint{best_zeta});
  detail::apply_sign_convention(fit.beta);
  fit.beta /= fit.beta.norm();  // guard rounding drift
  return fit;
}

inline IndexFit sse_fit(const ObservationSet& data, const SseOptions& opts = {}) {
  return sse_fit(data, default_sse_starts(data, opts), opts);
}

}  // namespace isopsm
