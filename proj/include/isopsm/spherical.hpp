#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "isopsm/errors.hpp"

namespace isopsm {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Angular coordinates of a unit vector in R^d: d-1 angles, the first d-2 in
/// [0, pi] and the last in [0, 2*pi].
struct SphericalPoint {
  Eigen::VectorXd zeta;

  Eigen::Index dim() const { return zeta.size() + 1; }
};

/// The angles-to-sphere map: component i is a product of leading sines and
/// one cosine, S_1 = cos z_1, S_i = sin z_1 ... sin z_{i-1} cos z_i, and the
/// last component replaces the cosine with sin z_{d-1}.
inline Eigen::VectorXd spherical_map(const SphericalPoint& point) {
  const Eigen::Index m = point.zeta.size();  // d - 1
  if (m < 1) throw DataError("spherical_map needs dimension >= 2");
  Eigen::VectorXd v(m + 1);
  double sin_prod = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    v[i] = sin_prod * std::cos(point.zeta[i]);
    sin_prod *= std::sin(point.zeta[i]);
  }
  v[m] = sin_prod;
  return v;
}

/// d x (d-1) Jacobian of the map, column j = dS/dzeta_j.  Entries are built
/// from explicit sine/cosine products (no divisions), so the matrix is exact
/// at domain boundaries as well.
inline Eigen::MatrixXd spherical_jacobian(const SphericalPoint& point) {
  const Eigen::Index m = point.zeta.size();
  if (m < 1) throw DataError("spherical_jacobian needs dimension >= 2");
  Eigen::VectorXd s(m), c(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s[i] = std::sin(point.zeta[i]);
    c[i] = std::cos(point.zeta[i]);
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m + 1, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    // rows i > j only: S_i depends on zeta_j when i > j (or i == j)
    for (Eigen::Index i = j; i <= m; ++i) {
      double prod = 1.0;
      const Eigen::Index last = std::min(i, m - 1);  // index of the cos factor in S_i
      for (Eigen::Index k = 0; k < last; ++k)
        prod *= (k == j) ? c[k] : s[k];
      if (i < m) {
        // S_i = (prod of sines up to i-1) * cos z_i
        prod *= (i == j) ? -s[i] : c[i];
      } else {
        // S_d = prod of all sines
        prod *= (m - 1 == j) ? c[m - 1] : s[m - 1];
      }
      jac(i, j) = prod;
    }
  }
  return jac;
}

/// Inverse of spherical_map on the closed domain.  Degenerate tails (all
/// remaining components zero) get angle 0.
inline SphericalPoint angles_from_direction(const Eigen::VectorXd& v) {
  const Eigen::Index dim = v.size();
  if (dim < 2) throw DataError("angles_from_direction needs dimension >= 2");
  SphericalPoint point;
  point.zeta.resize(dim - 1);
  for (Eigen::Index j = 0; j + 2 < dim; ++j) {
    const double r = v.tail(dim - j).norm();
    point.zeta[j] = r > 0.0 ? std::acos(std::clamp(v[j] / r, -1.0, 1.0)) : 0.0;
  }
  double last = std::atan2(v[dim - 1], v[dim - 2]);
  if (last < 0.0) last += kTwoPi;
  point.zeta[dim - 2] = last;
  return point;
}

}  // namespace isopsm
