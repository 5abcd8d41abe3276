#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"
#include "isopsm/index.hpp"
#include "isopsm/logistic.hpp"
#include "isopsm/pava.hpp"

namespace isopsm {

enum class EstimatorMethod { PavaMle, PavaSse, Para, PsmM, UnivariatePava };
enum class EffectTarget { Mu1, Att };

inline std::string estimator_method_name(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::PavaMle: return "PAVA-MLE";
    case EstimatorMethod::PavaSse: return "PAVA-SSE";
    case EstimatorMethod::Para: return "PARA";
    case EstimatorMethod::PsmM: return "PSM-M";
    default: return "UNIVARIATE-PAVA";
  }
}

inline std::string effect_target_name(EffectTarget t) {
  return t == EffectTarget::Mu1 ? "MU1" : "ATT";
}

struct EffectDiagnostics {
  std::size_t blocks = 1;       // matched-group count
  double min_fitted = 0.0;      // range of the fitted propensity
  double max_fitted = 0.0;
  int zero_over_zero = 0;       // times the 0/0 := 0 convention fired
};

struct EffectEstimate {
  double value = 0.0;
  EstimatorMethod method = EstimatorMethod::UnivariatePava;
  EffectTarget target = EffectTarget::Att;
  EffectDiagnostics diagnostics;
};

/// Per-block treated and control unit lists (sorted-order positions).  The
/// blocks partition 0..n-1 and all units in a block share one fitted value.
struct MatchingGroups {
  std::vector<std::vector<Eigen::Index>> treated;
  std::vector<std::vector<Eigen::Index>> control;
};

inline MatchingGroups matching_groups(const StepPropensity& step,
                                      const Eigen::VectorXi& d_sorted) {
  if (d_sorted.size() != step.n())
    throw DimensionMismatch("d length must match the fit");
  MatchingGroups groups;
  groups.treated.resize(step.block_count());
  groups.control.resize(step.block_count());
  for (std::size_t j = 0; j + 1 < step.block_ends.size(); ++j)
    for (Eigen::Index i = step.block_ends[j]; i < step.block_ends[j + 1]; ++i)
      (d_sorted[i] == 1 ? groups.treated[j] : groups.control[j]).push_back(i);
  return groups;
}

namespace detail {

// y and d in the same (sorted) order as the fitted values.

inline double mu1_ipw_kernel(const Eigen::VectorXd& y_s, const Eigen::VectorXi& d_s,
                             const Eigen::VectorXd& fit_s, int* zero_over_zero) {
  double acc = 0.0;
  int zeros = 0;
  for (Eigen::Index i = 0; i < y_s.size(); ++i) {
    if (fit_s[i] == 0.0) {
      // a zero block contains no treated units, so D_i/pihat_i = 0/0 := 0
      ++zeros;
      continue;
    }
    if (d_s[i] == 1) acc += y_s[i] / fit_s[i];
  }
  if (zero_over_zero) *zero_over_zero = zeros;
  return acc / static_cast<double>(y_s.size());
}

inline double att_ipw_kernel(const Eigen::VectorXd& y_s, const Eigen::VectorXi& d_s,
                             const Eigen::VectorXd& fit_s) {
  const Eigen::Index n = y_s.size();
  double acc = 0.0;
  std::int64_t n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d_s[i] == 1) {
      acc += y_s[i];
      ++n1;
    } else if (fit_s[i] > 0.0) {
      // a control cannot sit in an all-treated block, so fit_s[i] < 1 here
      acc -= y_s[i] * fit_s[i] / (1.0 - fit_s[i]);
    }
  }
  if (n1 == 0) throw DegenerateArm("no treated units");
  return acc / static_cast<double>(n1);
}

inline double att_hirano_kernel(const Eigen::VectorXd& y_s, const Eigen::VectorXi& d_s,
                                const Eigen::VectorXd& fit_s) {
  double acc = 0.0;
  double denom = fit_s.sum();  // equals n1 by the shape-restricted MLE constraint
  for (Eigen::Index i = 0; i < y_s.size(); ++i) {
    if (d_s[i] == 1)
      acc += y_s[i];
    else if (fit_s[i] > 0.0)
      acc -= y_s[i] * fit_s[i] / (1.0 - fit_s[i]);
  }
  if (!(denom > 0.0)) throw DegenerateArm("sum of fitted propensities is zero");
  return acc / denom;
}

inline double att_matching_kernel(const StepPropensity& step,
                                  const Eigen::VectorXd& y_s,
                                  const Eigen::VectorXi& d_s) {
  double acc = 0.0;
  std::int64_t n1 = 0;
  for (std::size_t j = 0; j + 1 < step.block_ends.size(); ++j) {
    double control_sum = 0.0;
    std::int64_t n_control = 0;
    for (Eigen::Index i = step.block_ends[j]; i < step.block_ends[j + 1]; ++i) {
      if (d_s[i] == 0) {
        control_sum += y_s[i];
        ++n_control;
      }
    }
    // all-treated block: no within-group control mean exists; such treated
    // units contribute Y_i alone, matching the IPW form
    const double control_mean = n_control > 0 ? control_sum / static_cast<double>(n_control) : 0.0;
    for (Eigen::Index i = step.block_ends[j]; i < step.block_ends[j + 1]; ++i) {
      if (d_s[i] == 1) {
        acc += y_s[i] - control_mean;
        ++n1;
      }
    }
  }
  if (n1 == 0) throw DegenerateArm("no treated units");
  return acc / static_cast<double>(n1);
}

inline void sorted_copies(const ObservationSet& data, const StepPropensity& step,
                          Eigen::VectorXd& y_s, Eigen::VectorXi& d_s) {
  y_s.resize(data.n());
  d_s.resize(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::Index unit = step.perm.order[static_cast<std::size_t>(i)];
    y_s[i] = data.y[unit];
    d_s[i] = data.d[unit];
  }
}

inline EffectDiagnostics step_diagnostics(const StepPropensity& step, int zeros) {
  EffectDiagnostics diag;
  diag.blocks = step.block_count();
  diag.min_fitted = step.block_values.front();
  diag.max_fitted = step.block_values.back();
  diag.zero_over_zero = zeros;
  return diag;
}

}  // namespace detail

/// mu1 estimate (1/n) sum D_i Y_i / pihat_i, with 0/0 := 0 in zero blocks.
/// Identical to the weighted group-mean form sum_j rho_j mu1hat_j.
inline EffectEstimate mu1_hat_pava(const ObservationSet& data,
                                   const StepPropensity& step,
                                   EstimatorMethod method = EstimatorMethod::UnivariatePava) {
  Eigen::VectorXd y_s;
  Eigen::VectorXi d_s;
  detail::sorted_copies(data, step, y_s, d_s);
  int zeros = 0;
  const double value = detail::mu1_ipw_kernel(y_s, d_s, step.fitted, &zeros);
  return EffectEstimate{value, method, EffectTarget::Mu1,
                        detail::step_diagnostics(step, zeros)};
}

/// ATT in inverse-probability-weighting form:
///   (1/n1) sum { D_j Y_j - (1-D_j) Y_j pihat_j / (1 - pihat_j) }.
/// Controls in a zero block carry weight 0; no clipping is applied anywhere.
inline EffectEstimate att_hat_pava(const ObservationSet& data,
                                   const StepPropensity& step,
                                   EstimatorMethod method = EstimatorMethod::UnivariatePava) {
  Eigen::VectorXd y_s;
  Eigen::VectorXi d_s;
  detail::sorted_copies(data, step, y_s, d_s);
  const double value = detail::att_ipw_kernel(y_s, d_s, step.fitted);
  return EffectEstimate{value, method, EffectTarget::Att,
                        detail::step_diagnostics(step, 0)};
}

/// ATT in exact-matching form: every treated unit is matched to the controls
/// of its own propensity block.  Equals the IPW form whenever each
/// treated-containing block holds a control.
inline EffectEstimate matching_form_att(const ObservationSet& data,
                                        const StepPropensity& step) {
  Eigen::VectorXd y_s;
  Eigen::VectorXi d_s;
  detail::sorted_copies(data, step, y_s, d_s);
  const double value = detail::att_matching_kernel(step, y_s, d_s);
  return EffectEstimate{value, EstimatorMethod::UnivariatePava, EffectTarget::Att,
                        detail::step_diagnostics(step, 0)};
}

/// ATT with the sum of fitted propensities as normalizer; coincides with
/// att_hat_pava because the monotone MLE satisfies sum pihat_i = n1.
inline EffectEstimate hirano_att(const ObservationSet& data,
                                 const StepPropensity& step) {
  Eigen::VectorXd y_s;
  Eigen::VectorXi d_s;
  detail::sorted_copies(data, step, y_s, d_s);
  const double value = detail::att_hirano_kernel(y_s, d_s, step.fitted);
  return EffectEstimate{value, EstimatorMethod::UnivariatePava, EffectTarget::Att,
                        detail::step_diagnostics(step, 0)};
}

/// Single-index pipeline: Z = X beta, sort, PAVA, then the chosen IPW
/// estimator.  The method tag records the index provenance.
inline EffectEstimate multivariate_pava_estimators(const ObservationSet& data,
                                                   const IndexFit& index,
                                                   EffectTarget target) {
  if (index.beta.size() != data.dim())
    throw DimensionMismatch("index dimension must match the covariates");
  EstimatorMethod method = EstimatorMethod::UnivariatePava;
  if (data.dim() > 1) {
    if (index.method == IndexMethod::LogisticMle) method = EstimatorMethod::PavaMle;
    if (index.method == IndexMethod::Sse) method = EstimatorMethod::PavaSse;
  }
  StepPropensity step = fit_step_propensity(data, data.x * index.beta);
  return target == EffectTarget::Mu1 ? mu1_hat_pava(data, step, method)
                                     : att_hat_pava(data, step, method);
}

/// Known-link estimators: plug parametric propensities link(b0 + X b) into
/// the IPW formulas directly.  Reports NumericalOverflow when a fitted
/// propensity sits within 1e-12 of 0 or 1 instead of clipping.
template <class LinkFn>
EffectEstimate para_estimators(const ObservationSet& data, LinkFn&& link,
                               const LogisticFit& fit, EffectTarget target) {
  if (fit.coef.size() != data.dim() + 1)
    throw DimensionMismatch("parametric fit dimension must match the covariates");
  const Eigen::Index n = data.n();
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = link(fit.coef[0] + data.x.row(i).dot(fit.coef.tail(data.dim())));
    if (!(p[i] > 1e-12) || !(p[i] < 1.0 - 1e-12))
      throw NumericalOverflow("parametric propensity within 1e-12 of {0,1} at unit " +
                              std::to_string(i));
  }
  EffectDiagnostics diag;
  diag.blocks = static_cast<std::size_t>(n);
  diag.min_fitted = p.minCoeff();
  diag.max_fitted = p.maxCoeff();

  double value = 0.0;
  if (target == EffectTarget::Mu1) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (data.d[i] == 1) value += data.y[i] / p[i];
    value /= static_cast<double>(n);
  } else {
    std::int64_t n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (data.d[i] == 1) {
        value += data.y[i];
        ++n1;
      } else {
        value -= data.y[i] * p[i] / (1.0 - p[i]);
      }
    }
    if (n1 == 0) throw DegenerateArm("no treated units");
    value /= static_cast<double>(n1);
  }
  return EffectEstimate{value, EstimatorMethod::Para, target, diag};
}

/// Nearest-neighbor ATT on a given propensity, matching with replacement:
/// each treated unit takes the M controls closest in |propensity difference|.
/// When the M-th distance is tied, every tied control enters with equal
/// weight.
inline EffectEstimate psm_m_att(const ObservationSet& data,
                                const Eigen::VectorXd& fitted_propensity, int m) {
  if (m < 1) throw DataError("M must be >= 1");
  if (fitted_propensity.size() != data.n())
    throw DimensionMismatch("propensity length must equal the unit count");
  std::vector<Eigen::Index> controls;
  std::vector<Eigen::Index> treated;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    (data.d[i] == 1 ? treated : controls).push_back(i);
  if (static_cast<int>(controls.size()) < m)
    throw InsufficientControls("need at least M=" + std::to_string(m) +
                               " controls, have " + std::to_string(controls.size()));

  // controls ordered by propensity; nearest sets are contiguous windows
  std::stable_sort(controls.begin(), controls.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return fitted_propensity[a] < fitted_propensity[b];
                   });
  std::vector<double> cp(controls.size()), cy(controls.size());
  for (std::size_t k = 0; k < controls.size(); ++k) {
    cp[k] = fitted_propensity[controls[k]];
    cy[k] = data.y[controls[k]];
  }

  double acc = 0.0;
  for (Eigen::Index i : treated) {
    const double target = fitted_propensity[i];
    auto hi_it = std::lower_bound(cp.begin(), cp.end(), target);
    std::ptrdiff_t hi = hi_it - cp.begin();
    std::ptrdiff_t lo = hi - 1;
    // expand the window to the M nearest controls
    for (int taken = 0; taken < m; ++taken) {
      const bool lo_ok = lo >= 0;
      const bool hi_ok = hi < static_cast<std::ptrdiff_t>(cp.size());
      if (lo_ok && (!hi_ok || target - cp[lo] <= cp[hi] - target))
        --lo;
      else
        ++hi;
    }
    double mth = 0.0;
    for (std::ptrdiff_t k = lo + 1; k < hi; ++k)
      mth = std::max(mth, std::abs(cp[k] - target));
    // include every control tied with the M-th distance
    while (lo >= 0 && std::abs(cp[lo] - target) == mth) --lo;
    while (hi < static_cast<std::ptrdiff_t>(cp.size()) &&
           std::abs(cp[hi] - target) == mth)
      ++hi;
    double sum = 0.0;
    for (std::ptrdiff_t k = lo + 1; k < hi; ++k) sum += cy[k];
    acc += data.y[i] - sum / static_cast<double>(hi - lo - 1);
  }

  EffectDiagnostics diag;
  diag.blocks = treated.size();
  diag.min_fitted = fitted_propensity.minCoeff();
  diag.max_fitted = fitted_propensity.maxCoeff();
  return EffectEstimate{acc / static_cast<double>(treated.size()),
                        EstimatorMethod::PsmM, EffectTarget::Att, diag};
}

}  // namespace isopsm
