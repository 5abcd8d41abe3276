#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace isopsm {

struct NelderMeadOptions {
  int max_iter = 500;
  double tol_f = 1e-12;   // spread of simplex values
  double tol_x = 1e-9;    // spread of simplex vertices
  double init_step = 0.25;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Derivative-free downhill simplex minimization (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5).  Works from dimension 1 upward.
template <class F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& start,
                             const NelderMeadOptions& opts = {}) {
  const Eigen::Index dim = start.size();
  struct Vertex {
    Eigen::VectorXd x;
    double fx;
  };
  std::vector<Vertex> simplex(static_cast<std::size_t>(dim) + 1);
  NelderMeadResult res;

  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    return f(x);
  };

  simplex[0] = {start, eval(start)};
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd x = start;
    x[i] += opts.init_step;
    simplex[static_cast<std::size_t>(i) + 1] = {x, eval(x)};
  }
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; };
  std::stable_sort(simplex.begin(), simplex.end(), by_value);

  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it + 1;
    double spread_f = simplex.back().fx - simplex.front().fx;
    double spread_x = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
      spread_x = std::max(spread_x,
                          (simplex[i].x - simplex[0].x).cwiseAbs().maxCoeff());
    if (spread_f <= opts.tol_f && spread_x <= opts.tol_x) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i].x;
    centroid /= static_cast<double>(dim);

    Vertex& worst = simplex.back();
    Eigen::VectorXd xr = centroid + (centroid - worst.x);
    double fr = eval(xr);
    if (fr < simplex.front().fx) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst.x);
      double fe = eval(xe);
      if (fe < fr)
        worst = {xe, fe};
      else
        worst = {xr, fr};
    } else if (fr < simplex[simplex.size() - 2].fx) {
      worst = {xr, fr};
    } else {
      bool outside = fr < worst.fx;
      Eigen::VectorXd xc;
      if (outside)
        xc = centroid + 0.5 * (xr - centroid);
      else
        xc = centroid - 0.5 * (centroid - worst.x);
      double fc = eval(xc);
      if (fc <= std::min(fr, worst.fx)) {
        worst = {xc, fc};
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
          simplex[i].fx = eval(simplex[i].x);
        }
      }
    }
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
  }

  res.x = simplex.front().x;
  res.value = simplex.front().fx;
  return res;
}

}  // namespace isopsm
