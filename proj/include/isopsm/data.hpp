#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "isopsm/errors.hpp"

namespace isopsm {

/// One input row: outcome, treatment indicator and covariate vector.
struct RawRecord {
  double y = 0.0;
  double d = 0.0;
  std::vector<double> x;
};

/// Validated sample of n units.  Immutable by convention: every operation in
/// the library is a pure function of its inputs.
struct ObservationSet {
  Eigen::VectorXd y;   // outcome per unit
  Eigen::VectorXi d;   // treatment indicator, 0 or 1
  Eigen::MatrixXd x;   // n x dim covariates

  Eigen::Index n() const { return y.size(); }
  Eigen::Index dim() const { return x.cols(); }
  int n_treated() const { return d.sum(); }
};

/// Checks the container invariants shared by every pipeline: rectangular
/// finite data, binary treatment, both arms present, n >= 2.
inline ObservationSet make_observation_set(Eigen::VectorXd y, Eigen::VectorXi d,
                                           Eigen::MatrixXd x) {
  const Eigen::Index n = y.size();
  if (n < 2) throw DegenerateArm("need at least two units");
  if (d.size() != n || x.rows() != n)
    throw DimensionMismatch("y, d, x must have the same number of rows");
  if (x.cols() < 1) throw DimensionMismatch("need at least one covariate");
  if (!y.allFinite() || !x.allFinite())
    throw NonFinite("non-finite outcome or covariate value");
  int n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d[i] != 0 && d[i] != 1)
      throw NonBinaryTreatment("treatment indicator must be 0 or 1 (unit " +
                               std::to_string(i) + ")");
    n1 += d[i];
  }
  if (n1 == 0) throw DegenerateArm("no treated units");
  if (n1 == n) throw DegenerateArm("no control units");
  return ObservationSet{std::move(y), std::move(d), std::move(x)};
}

/// Validates raw records into an ObservationSet.  Strict: rejects ragged
/// covariates, non-binary treatment, single-arm data and non-finite values;
/// never drops or imputes rows.
inline ObservationSet validate(const std::vector<RawRecord>& records) {
  if (records.empty()) throw EmptyInput("no records");
  const std::size_t dim = records.front().x.size();
  if (dim == 0) throw DimensionMismatch("record 0 has no covariates");
  const Eigen::Index n = static_cast<Eigen::Index>(records.size());
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    const RawRecord& r = records[static_cast<std::size_t>(i)];
    if (r.x.size() != dim)
      throw DimensionMismatch("record " + std::to_string(i) + " has " +
                              std::to_string(r.x.size()) + " covariates, expected " +
                              std::to_string(dim));
    if (!std::isfinite(r.y) || !std::isfinite(r.d))
      throw NonFinite("non-finite value in record " + std::to_string(i));
    if (r.d != 0.0 && r.d != 1.0)
      throw NonBinaryTreatment("treatment must be 0 or 1 in record " +
                               std::to_string(i));
    y[i] = r.y;
    d[i] = static_cast<int>(r.d);
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::isfinite(r.x[j]))
        throw NonFinite("non-finite covariate in record " + std::to_string(i));
      x(i, static_cast<Eigen::Index>(j)) = r.x[j];
    }
  }
  return make_observation_set(std::move(y), std::move(d), std::move(x));
}

/// Stable nondecreasing ordering of a scalar key.  order[k] is the original
/// index of the k-th smallest key; ties keep input order.
struct SortPermutation {
  std::vector<Eigen::Index> order;
  Eigen::VectorXd key;  // key in sorted order

  Eigen::Index n() const { return key.size(); }
};

inline SortPermutation sort_by_key(const Eigen::VectorXd& key) {
  if (!key.allFinite()) throw NonFinite("sort key contains non-finite values");
  SortPermutation perm;
  perm.order.resize(static_cast<std::size_t>(key.size()));
  std::iota(perm.order.begin(), perm.order.end(), Eigen::Index{0});
  std::stable_sort(perm.order.begin(), perm.order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return key[a] < key[b]; });
  perm.key.resize(key.size());
  for (Eigen::Index i = 0; i < key.size(); ++i) perm.key[i] = key[perm.order[static_cast<std::size_t>(i)]];
  return perm;
}

inline SortPermutation identity_permutation(Eigen::Index n) {
  SortPermutation perm;
  perm.order.resize(static_cast<std::size_t>(n));
  std::iota(perm.order.begin(), perm.order.end(), Eigen::Index{0});
  perm.key = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n > 1 ? n - 1 : 0));
  return perm;
}

/// Quadratic feature expansion: original columns, then cross products x_i*x_j
/// (i < j), then squares.  For two covariates this is (x1, x2, x1*x2, x1^2, x2^2).
inline Eigen::MatrixXd quadratic_features(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const Eigen::Index extra = d * (d + 1) / 2;
  Eigen::MatrixXd out(n, d + extra);
  out.leftCols(d) = x;
  Eigen::Index col = d;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j)
      out.col(col++) = x.col(i).cwiseProduct(x.col(j));
  for (Eigen::Index i = 0; i < d; ++i) out.col(col++) = x.col(i).cwiseAbs2();
  return out;
}

}  // namespace isopsm
