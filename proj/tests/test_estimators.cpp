#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "isopsm/estimators.hpp"
#include "isopsm/simulation.hpp"
#include "helpers.hpp"

using namespace isopsm;

namespace {

ObservationSet tiny(std::initializer_list<double> y_list,
                    std::initializer_list<int> d_list,
                    std::initializer_list<double> x_list) {
  const Eigen::Index n = static_cast<Eigen::Index>(y_list.size());
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 1);
  Eigen::Index i = 0;
  for (double v : y_list) y[i++] = v;
  i = 0;
  for (int v : d_list) d[i++] = v;
  i = 0;
  for (double v : x_list) x(i++, 0) = v;
  return make_observation_set(y, d, x);
}

}  // namespace

TEST_CASE("mu1 on the hand example (1,0,1)") {
  auto data = tiny({2, 5, 4}, {1, 0, 1}, {1, 2, 3});
  auto step = fit_step_propensity(data, data.x.col(0));
  auto est = mu1_hat_pava(data, step);
  CHECK(est.value == Catch::Approx(8.0 / 3.0).margin(1e-14));
  CHECK(est.diagnostics.blocks == 2);

  // weighted group-mean form: rho_1 * mu_1 + rho_2 * mu_2
  const double grouped = (2.0 / 3.0) * 2.0 + (1.0 / 3.0) * 4.0;
  CHECK(est.value == Catch::Approx(grouped).margin(1e-14));
}

TEST_CASE("mu1 with a perfectly separated fit keeps only treated blocks") {
  Eigen::VectorXd y(4);
  y << 11, 13, 5, 7;
  auto data = tiny({11, 13, 5, 7}, {0, 0, 1, 1}, {1, 2, 3, 4});
  auto step = fit_step_propensity(data, data.x.col(0));
  auto est = mu1_hat_pava(data, step);
  CHECK(est.value == Catch::Approx((5.0 + 7.0) / 4.0).margin(1e-14));
  CHECK(est.diagnostics.zero_over_zero == 2);
}

TEST_CASE("mu1 kernel reduces to the sample mean when everyone is treated") {
  Eigen::VectorXd y(3);
  y << 1.0, 4.0, 7.0;
  Eigen::VectorXi d(3);
  d << 1, 1, 1;
  auto step = pava_fit(d);
  int zeros = 0;
  CHECK(detail::mu1_ipw_kernel(y, d, step.fitted, &zeros) ==
        Catch::Approx(4.0).margin(1e-14));
  CHECK(zeros == 0);
}

TEST_CASE("att on the hand example (1,0,1) in all three forms") {
  auto data = tiny({2, 5, 4}, {1, 0, 1}, {1, 2, 3});
  auto step = fit_step_propensity(data, data.x.col(0));
  auto ipw = att_hat_pava(data, step);
  CHECK(ipw.value == Catch::Approx(0.5).margin(1e-14));
  auto matching = matching_form_att(data, step);
  CHECK(matching.value == Catch::Approx(0.5).margin(1e-14));
  auto hirano = hirano_att(data, step);
  CHECK(hirano.value == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("att with separated fit drops control terms") {
  auto data = tiny({10, 20, 3, 5}, {0, 0, 1, 1}, {1, 2, 3, 4});
  auto step = fit_step_propensity(data, data.x.col(0));
  auto est = att_hat_pava(data, step);
  CHECK(est.value == Catch::Approx(4.0).margin(1e-14));
}

TEST_CASE("matching form on a single mixed block") {
  auto data = tiny({3, 1}, {1, 0}, {1, 1});
  auto step = fit_step_propensity(data, data.x.col(0));
  CHECK(matching_form_att(data, step).value == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("hirano kernel with all units treated equals the mean") {
  Eigen::VectorXd y(3);
  y << 3.0, 6.0, 9.0;
  Eigen::VectorXi d(3);
  d << 1, 1, 1;
  auto step = pava_fit(d);
  CHECK(detail::att_hirano_kernel(y, d, step.fitted) ==
        Catch::Approx(6.0).margin(1e-14));
}

TEST_CASE("identity properties over random datasets") {
  std::mt19937_64 gen(314);
  int applicable = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    auto data = test_helpers::random_dataset(gen);
    auto step = fit_step_propensity(data, data.x.col(0));
    const double ipw = att_hat_pava(data, step).value;

    // Hirano normalization never differs
    CHECK(std::abs(hirano_att(data, step).value - ipw) <= 1e-12);

    // matching identity holds whenever every treated block has a control,
    // i.e. the top block value is below one
    if (step.block_values.back() < 1.0) {
      ++applicable;
      CHECK(std::abs(matching_form_att(data, step).value - ipw) <= 1e-10);
    }

    // grouped-mean identity for mu1
    const double mu1 = mu1_hat_pava(data, step).value;
    double grouped = 0.0;
    for (std::size_t j = 0; j + 1 < step.block_ends.size(); ++j) {
      double dy = 0.0;
      int dcount = 0;
      for (Eigen::Index i = step.block_ends[j]; i < step.block_ends[j + 1]; ++i) {
        const Eigen::Index unit = step.perm.order[static_cast<std::size_t>(i)];
        dy += data.d[unit] * data.y[unit];
        dcount += data.d[unit];
      }
      const double rho = static_cast<double>(step.block_ends[j + 1] - step.block_ends[j]) /
                         static_cast<double>(data.n());
      if (dcount > 0) grouped += rho * (dy / dcount);
    }
    CHECK(std::abs(mu1 - grouped) <= 1e-12);
  }
  CHECK(applicable > 100);
}

TEST_CASE("location equivariance when no block sits at 0 or 1") {
  std::mt19937_64 gen(999);
  int tested = 0;
  while (tested < 200) {
    auto data = test_helpers::random_dataset(gen);
    auto step = fit_step_propensity(data, data.x.col(0));
    // blocks at 0 or 1 receive zero weight, which breaks exact shifting;
    // restrict to interior fits
    if (step.block_values.front() <= 0.0 || step.block_values.back() >= 1.0)
      continue;
    ++tested;
    const double c = 3.25;
    auto shifted =
        make_observation_set((data.y.array() + c).matrix(), data.d, data.x);
    auto step2 = fit_step_propensity(shifted, shifted.x.col(0));
    CHECK(std::abs(mu1_hat_pava(shifted, step2).value -
                   mu1_hat_pava(data, step).value - c) <= 1e-12 * (1.0 + c));
    CHECK(std::abs(att_hat_pava(shifted, step2).value -
                   att_hat_pava(data, step).value) <= 1e-12 * 10);
  }
}

TEST_CASE("univariate estimates are invariant to increasing transforms") {
  std::mt19937_64 gen(555);
  for (int rep = 0; rep < 100; ++rep) {
    auto data = test_helpers::random_dataset(gen);
    auto step = fit_step_propensity(data, data.x.col(0));
    Eigen::MatrixXd tx = data.x.array().exp().matrix();
    auto tdata = make_observation_set(data.y, data.d, tx);
    auto tstep = fit_step_propensity(tdata, tdata.x.col(0));
    // rank order unchanged -> identical fit and estimates, bit for bit
    REQUIRE((step.fitted.array() == tstep.fitted.array()).all());
    CHECK(mu1_hat_pava(data, step).value == mu1_hat_pava(tdata, tstep).value);
    CHECK(att_hat_pava(data, step).value == att_hat_pava(tdata, tstep).value);
  }
}

TEST_CASE("multivariate pipeline with a unit index equals the univariate one") {
  std::mt19937_64 gen(31);
  auto data = test_helpers::random_dataset(gen);
  IndexFit unit = supplied_index(Eigen::VectorXd::Ones(1));
  auto est = multivariate_pava_estimators(data, unit, EffectTarget::Att);
  auto step = fit_step_propensity(data, data.x.col(0));
  CHECK(est.value == att_hat_pava(data, step).value);
  CHECK(est.method == EstimatorMethod::UnivariatePava);
}

TEST_CASE("para with a constant half link doubles the treated mean") {
  auto data = tiny({2, 5, 4, 1}, {1, 0, 1, 0}, {1, 2, 3, 4});
  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(2);  // linear predictor 0 everywhere
  auto est = para_estimators(data, [](double) { return 0.5; }, fit,
                             EffectTarget::Mu1);
  CHECK(est.value == Catch::Approx(2.0 * (2.0 + 4.0) / 4.0).margin(1e-14));
}

TEST_CASE("para att by direct arithmetic on two units") {
  auto data = tiny({3.0, 2.0}, {1, 0}, {0.0, 0.0});
  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(2);
  fit.coef[0] = std::log(3.0);  // propensity 0.75 everywhere
  auto est = para_estimators(data, [](double t) { return logistic_cdf(t); },
                             fit, EffectTarget::Att);
  // (1/n1) { y1 - y0 * 0.75/0.25 } = 3 - 2*3 = -3
  CHECK(est.value == Catch::Approx(-3.0).margin(1e-12));
}

TEST_CASE("para reports boundary propensities instead of clipping") {
  auto data = tiny({1, 2}, {1, 0}, {0.0, 40.0});
  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(2);
  fit.coef[1] = 1.0;  // propensity at x=40 is within 1e-12 of 1
  CHECK_THROWS_AS(para_estimators(data, [](double t) { return logistic_cdf(t); },
                                  fit, EffectTarget::Att),
                  NumericalOverflow);
}

TEST_CASE("psm matches the nearest control") {
  auto data = tiny({10, 1, 2}, {1, 0, 0}, {1, 2, 3});
  Eigen::VectorXd ps(3);
  ps << 0.6, 0.5, 0.9;
  auto est = psm_m_att(data, ps, 1);
  CHECK(est.value == Catch::Approx(10.0 - 1.0).margin(1e-14));
}

TEST_CASE("psm with every control reduces to the difference in means") {
  std::mt19937_64 gen(2718);
  for (int rep = 0; rep < 50; ++rep) {
    auto data = test_helpers::random_dataset(gen);
    const int n0 = static_cast<int>(data.n()) - data.n_treated();
    Eigen::VectorXd ps(data.n());
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    for (Eigen::Index i = 0; i < data.n(); ++i) ps[i] = unif(gen);
    auto est = psm_m_att(data, ps, n0);
    double t = 0, c = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i)
      (data.d[i] == 1 ? t : c) += data.y[i];
    const double diff = t / data.n_treated() - c / n0;
    CHECK(est.value == Catch::Approx(diff).margin(1e-12));
  }
}

TEST_CASE("psm averages across distance ties") {
  // treated at 0.5; controls at 0.4 and 0.6 tie for the single match
  auto data = tiny({10, 2, 4}, {1, 0, 0}, {1, 2, 3});
  Eigen::VectorXd ps(3);
  ps << 0.5, 0.4, 0.6;
  auto est = psm_m_att(data, ps, 1);
  CHECK(est.value == Catch::Approx(10.0 - 3.0).margin(1e-14));
}

TEST_CASE("all estimators are near zero when treatment is independent") {
  // D independent of (Y, X): the effect on the treated is zero
  std::mt19937_64 gen(8080);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const int n = 4000;
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(gen);
    x(i, 1) = normal(gen);
    d[i] = unif(gen) < 0.5 ? 1 : 0;
    y[i] = normal(gen) + x(i, 0) - x(i, 1);
  }
  auto data = make_observation_set(y, d, x);
  auto values = evaluate_estimators(data, default_estimators());
  // sd of each estimator is at most ~ sd(y)/sqrt(n1) ~ 0.04; allow 4 sd
  for (const auto& v : values) {
    REQUIRE(v.has_value());
    CHECK(std::abs(*v) < 0.2);
  }
}

TEST_CASE("psm requires enough controls") {
  auto data = tiny({1, 2, 3}, {1, 1, 0}, {1, 2, 3});
  Eigen::VectorXd ps(3);
  ps << 0.5, 0.6, 0.4;
  CHECK_THROWS_AS(psm_m_att(data, ps, 2), InsufficientControls);
}
