#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"
#include "isopsm/link.hpp"

namespace isopsm {

struct LogisticOptions {
  int max_iter = 100;
  // convergence on the mean-score scale, max |grad loglik| / n
  double score_tol = 1e-12;
  double separation_norm = 1e6;
};

/// Logistic regression fit of D on (1, X): coef[0] is the intercept,
/// coef[1..dim] the slopes.
struct LogisticFit {
  Eigen::VectorXd coef;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;

  Eigen::VectorXd slopes() const { return coef.tail(coef.size() - 1); }
  double linear_predictor(const Eigen::VectorXd& xi) const {
    return coef[0] + xi.dot(coef.tail(coef.size() - 1));
  }
};

namespace detail {

inline double logistic_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXi& d) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log p = -log(1+exp(-eta)), log(1-p) = -log(1+exp(eta))
    const double t = d[i] == 1 ? -eta[i] : eta[i];
    ll -= t > 30.0 ? t : std::log1p(std::exp(t));
  }
  return ll;
}

}  // namespace detail

/// Newton-Raphson with step-halving on likelihood decrease.  Throws
/// Separation when the coefficient norm diverges, RankDeficient when the
/// Hessian is singular, NonConvergence when the iteration cap is hit.
inline LogisticFit fit_logistic(const ObservationSet& data,
                                const LogisticOptions& opts = {}) {
  const Eigen::Index n = data.n(), d = data.dim();
  Eigen::MatrixXd z(n, d + 1);
  z.col(0).setOnes();
  z.rightCols(d) = data.x;

  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = detail::logistic_loglik(eta, data.d);

  for (int it = 1; it <= opts.max_iter; ++it) {
    fit.iterations = it;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = logistic_cdf(eta[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    Eigen::VectorXd resid = data.d.cast<double>() - mu;
    Eigen::VectorXd score = z.transpose() * resid;
    if (score.cwiseAbs().maxCoeff() / static_cast<double>(n) < opts.score_tol) {
      // a perfect fit means the arms are separated: the likelihood has no
      // interior maximum and the score only vanishes at saturation
      if (ll > -1e-6)
        throw Separation("perfect separation: likelihood saturates at zero");
      fit.converged = true;
      fit.loglik = ll;
      return fit;
    }
    Eigen::MatrixXd hess = z.transpose() * w.asDiagonal() * z;
    Eigen::LDLT<Eigen::MatrixXd> solver(hess);
    if (solver.info() != Eigen::Success || !solver.isPositive())
      throw RankDeficient("singular information matrix in logistic fit");
    Eigen::VectorXd step = solver.solve(score);
    if (!step.allFinite())
      throw RankDeficient("singular information matrix in logistic fit");

    // step-halving until the likelihood does not decrease
    double scale = 1.0;
    Eigen::VectorXd coef_new, eta_new;
    double ll_new = 0.0;
    for (int half = 0; half < 40; ++half) {
      coef_new = fit.coef + scale * step;
      eta_new = z * coef_new;
      ll_new = detail::logistic_loglik(eta_new, data.d);
      if (ll_new >= ll - 1e-12) break;
      scale *= 0.5;
    }
    fit.coef = coef_new;
    eta = eta_new;
    ll = ll_new;
    if (fit.coef.norm() > opts.separation_norm)
      throw Separation("perfect separation: coefficient norm diverged");
  }
  throw NonConvergence("logistic fit did not converge in " +
                       std::to_string(opts.max_iter) + " iterations");
}

/// Fitted parametric propensities logistic(intercept + x beta) for each row.
inline Eigen::VectorXd fitted_propensity(const LogisticFit& fit,
                                         const Eigen::MatrixXd& x) {
  Eigen::VectorXd eta =
      (x * fit.coef.tail(fit.coef.size() - 1)).array() + fit.coef[0];
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = logistic_cdf(eta[i]);
  return eta;
}

}  // namespace isopsm
