#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "isopsm/data.hpp"
#include "isopsm/link.hpp"

namespace test_helpers {

inline const double kPi = std::acos(-1.0);

// Exhaustive isotonic least-squares oracle: tries every ordered block
// partition (composition of n), keeps those with nondecreasing block means,
// and returns the fit with the smallest sum of squares.  Independent of the
// production PAVA path.
inline std::vector<double> brute_force_isotonic(const std::vector<int>& d) {
  const int n = static_cast<int>(d.size());
  std::vector<int> prefix(n + 1, 0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + d[i];

  std::vector<double> best;
  double best_sse = std::numeric_limits<double>::infinity();
  const unsigned long masks = n >= 1 ? (1UL << (n - 1)) : 1;
  std::vector<double> candidate(n);
  for (unsigned long mask = 0; mask < masks; ++mask) {
    // bit i set = block boundary between positions i and i+1
    double prev_mean = -1.0;
    double sse = 0.0;
    bool monotone = true;
    int start = 0;
    for (int i = 0; i < n && monotone; ++i) {
      const bool boundary = i == n - 1 || (mask >> i) & 1;
      if (!boundary) continue;
      const int len = i + 1 - start;
      const int count = prefix[i + 1] - prefix[start];
      const double mean = static_cast<double>(count) / len;
      if (mean < prev_mean) {
        monotone = false;
        break;
      }
      prev_mean = mean;
      // SSE over the block: count ones, len-count zeros
      sse += count * (1.0 - mean) * (1.0 - mean) + (len - count) * mean * mean;
      for (int k = start; k <= i; ++k) candidate[k] = mean;
      start = i + 1;
    }
    if (monotone && sse < best_sse) {
      best_sse = sse;
      best = candidate;
    }
  }
  return best;
}

inline double sse_of(const std::vector<int>& d, const Eigen::VectorXd& fit) {
  double s = 0.0;
  for (int i = 0; i < static_cast<int>(d.size()); ++i)
    s += (d[i] - fit[i]) * (d[i] - fit[i]);
  return s;
}

// Random valid dataset with both arms, n in [n_min, n_max].
inline isopsm::ObservationSet random_dataset(std::mt19937_64& gen, int n_min = 4,
                                             int n_max = 200, int dim = 1) {
  std::uniform_int_distribution<int> size(n_min, n_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const int n = size(gen);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    Eigen::MatrixXd x(n, dim);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) x(i, j) = normal(gen);
      const double p = isopsm::logistic_cdf(0.75 * x.row(i).sum() - 0.25);
      d[i] = unif(gen) < p ? 1 : 0;
      y[i] = normal(gen) + 2.0 * d[i] + x(i, 0);
    }
    const int n1 = d.sum();
    if (n1 == 0 || n1 == n) continue;
    return isopsm::make_observation_set(std::move(y), std::move(d), std::move(x));
  }
}

// 1-D Gauss-Hermite evaluation of E[f(u)] for u ~ N(0,1); nodes generated by
// Newton iteration on the Hermite recurrence.  Used as the quadrature route
// for design-based expectations E[g(u) * link(2 + sqrt(2) u)].
inline double gauss_hermite_normal(int points, const std::function<double(double)>& f) {
  // nodes/weights for the physicists' Hermite polynomials
  std::vector<double> nodes(points), weights(points);
  const int m = (points + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * points + 1.0) - 1.85575 * std::pow(2.0 * points + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(points, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * nodes[1];
    else
      z = 2.0 * z - nodes[i - 2];
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = std::pow(test_helpers::kPi, -0.25), p2 = 0.0;
      for (int j = 0; j < points; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * points) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    nodes[i] = z;
    nodes[points - 1 - i] = -z;
    weights[i] = 2.0 / (pp * pp);
    weights[points - 1 - i] = weights[i];
  }
  // E[f(U)] with U ~ N(0,1): sum w_i f(sqrt(2) x_i) / sqrt(pi)
  double acc = 0.0;
  for (int i = 0; i < points; ++i)
    acc += weights[i] * f(std::sqrt(2.0) * nodes[i]);
  return acc / std::sqrt(test_helpers::kPi);
}

// Quadrature route for the design's true ATT (independent of the library's
// Monte Carlo oracle).  Uses the rotation u = (x1+x2)/sqrt2, v = (x1-x2)/sqrt2:
// the propensity depends on u alone and v integrates out in closed form.
inline double quadrature_true_att(int model, int a, int b, isopsm::Link link) {
  const double alpha = (1.0 + b) / std::sqrt(2.0);
  const double beta = (1.0 - b) / std::sqrt(2.0);
  auto w = [&](double u) { return isopsm::link_cdf(link, 2.0 + std::sqrt(2.0) * u); };
  auto m = [&](double u) {
    double power_part;
    if (a == 1)
      power_part = -(std::sqrt(2.0) * u) + alpha * u;  // E_v[alpha u + beta v] = alpha u
    else
      power_part = -2.0 * u * u + (alpha * alpha * u * u + beta * beta);
    double h_part;
    if (model == 1)
      h_part = std::exp(-0.5 * beta * beta) * std::cos(alpha * u);
    else
      h_part = u / std::sqrt(2.0);  // E_v[(u+v)/sqrt2] given u
    return power_part - 3.0 * h_part;
  };
  const int pts = 150;
  const double num = gauss_hermite_normal(pts, [&](double u) { return m(u) * w(u); });
  const double den = gauss_hermite_normal(pts, [&](double u) { return w(u); });
  return num / den;
}

}  // namespace test_helpers
