#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "isopsm/index.hpp"
#include "isopsm/logistic.hpp"
#include "helpers.hpp"

using namespace isopsm;

namespace {

ObservationSet logistic_sample(int n, double b0, Eigen::Vector2d slope,
                               std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(gen);
    x(i, 1) = normal(gen);
    const double p = logistic_cdf(b0 + slope.dot(x.row(i)));
    d[i] = unif(gen) < p ? 1 : 0;
    y[i] = normal(gen);
  }
  return make_observation_set(y, d, x);
}

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace

TEST_CASE("logistic index recovers the direction at n = 20000") {
  auto data = logistic_sample(20000, 2.0, {1.0, 1.0}, 99);
  IndexFit fit = logistic_mle(data);
  REQUIRE(fit.converged);
  Eigen::Vector2d truth(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
  CHECK(angle_between(fit.beta, truth) < 0.05);
  CHECK(std::abs(fit.beta.norm() - 1.0) <= 1e-12);
}

TEST_CASE("logistic fit detects perfect separation") {
  const int n = 60;
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i) / n;
    d[i] = x(i, 0) > 0.5 ? 1 : 0;
    y[i] = 0.0;
  }
  auto data = make_observation_set(y, d, x);
  CHECK_THROWS_AS(fit_logistic(data), Separation);
}

TEST_CASE("exchangeable data gives equal slope components") {
  // duplicate every point with swapped coordinates: the sample itself is
  // symmetric under the exchange, so the MLE must be too
  auto base = logistic_sample(600, 1.0, {0.8, 0.3}, 7);
  const int n = 2 * static_cast<int>(base.n());
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < base.n(); ++i) {
    y[2 * i] = base.y[i];
    y[2 * i + 1] = base.y[i];
    d[2 * i] = base.d[i];
    d[2 * i + 1] = base.d[i];
    x(2 * i, 0) = base.x(i, 0);
    x(2 * i, 1) = base.x(i, 1);
    x(2 * i + 1, 0) = base.x(i, 1);
    x(2 * i + 1, 1) = base.x(i, 0);
  }
  auto data = make_observation_set(y, d, x);
  IndexFit fit = logistic_mle(data);
  CHECK(std::abs(fit.beta[0] - fit.beta[1]) < 1e-7);
}

TEST_CASE("normalized direction is invariant to column rescaling") {
  auto data = logistic_sample(3000, 1.5, {1.0, -0.4}, 31);
  IndexFit base = logistic_mle(data);

  const double scale = 37.5;
  Eigen::MatrixXd scaled_x = data.x;
  scaled_x.col(1) *= scale;
  auto scaled = make_observation_set(data.y, data.d, scaled_x);
  IndexFit fit = logistic_mle(scaled);

  // undo the scale on the fitted direction and renormalize
  Eigen::VectorXd undone = fit.beta;
  undone[1] *= scale;
  undone /= undone.norm();
  if (undone.dot(base.beta) < 0) undone = -undone;
  CHECK((undone - base.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("univariate data short-circuits to the unit index") {
  std::mt19937_64 gen(5);
  auto data = test_helpers::random_dataset(gen);
  IndexFit fit = logistic_mle(data);
  REQUIRE(fit.beta.size() == 1);
  CHECK(fit.beta[0] == 1.0);
}

TEST_CASE("rank-deficient design is reported") {
  const int n = 80;
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(gen);
    x(i, 1) = 2.0 * x(i, 0);  // exactly collinear
    d[i] = unif(gen) < 0.5 ? 1 : 0;
    y[i] = 0.0;
  }
  auto data = make_observation_set(y, d, x);
  CHECK_THROWS_AS(fit_logistic(data), RankDeficient);
}
