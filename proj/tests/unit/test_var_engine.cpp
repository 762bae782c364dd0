#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "table4.hpp"
#include "tilt/errors.hpp"
#include "tilt/families.hpp"
#include "tilt/numerics.hpp"
#include "tilt/parallel.hpp"
#include "tilt/solver.hpp"
#include "tilt/var_engine.hpp"

using namespace tilt;

namespace {

// Half-width of the tilts where the jump part of psi stays inside double
// range; for the fifteen-factor model this is far inside the strip.
double representable(const LossModel& m) {
  const double v = m.jump_loading_variance();
  const double a = std::fabs(m.jump_loading_mean());
  const double limit = 600.0;
  const double t = v > 0.0 ? (-a + std::sqrt(a * a + 2.0 * v * limit)) / v : INFINITY;
  return std::min(m.strip(), t);
}

JumpDiffusionSpec one_factor(double sigma, double dt, double intensity = 0.0) {
  JumpDiffusionSpec s;
  s.mu = Eigen::VectorXd::Zero(1);
  s.sigma = Eigen::VectorXd::Constant(1, sigma);
  s.corr = Eigen::MatrixXd::Identity(1, 1);
  s.jump_intensity = intensity;
  s.eta = Eigen::VectorXd::Zero(1);
  s.delta = Eigen::VectorXd::Constant(1, 0.1);
  s.jump_corr = Eigen::MatrixXd::Identity(1, 1);
  s.dt = dt;
  return s;
}

QuadraticPortfolio diagonal(double b, double lambda, double a1 = 0.0) {
  return QuadraticPortfolio::from_diagonal(Eigen::VectorXd::Constant(1, b),
                                           Eigen::VectorXd::Constant(1, lambda),
                                           Eigen::VectorXd::Constant(1, a1));
}

}  // namespace

TEST_CASE("diagonalize") {
  {
    Eigen::MatrixXd A = Eigen::Vector3d(0.5, 2.0, -1.0).asDiagonal();
    const auto d = diagonalize(Eigen::MatrixXd::Identity(3, 3), A);
    CHECK(d.lambdas(0) == doctest::Approx(2.0));
    CHECK(d.lambdas(1) == doctest::Approx(0.5));
    CHECK(d.lambdas(2) == doctest::Approx(-1.0));
    CHECK((d.C * d.C.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK((d.C.cwiseAbs() - d.C.cwiseAbs().cwiseMin(1.0)).norm() == 0.0);
  }
  {
    const Eigen::MatrixXd corr = table4::equicorrelation(2, 0.3);
    const Eigen::MatrixXd A = Eigen::Vector2d(5.2, 0.7).asDiagonal();
    const auto d = diagonalize(corr, A);
    CHECK((d.C * d.C.transpose() - corr).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd D = d.C.transpose() * A * d.C;
    CHECK((D - Eigen::MatrixXd(d.lambdas.asDiagonal())).cwiseAbs().maxCoeff() < 1e-10);
  }
  {
    const auto d = diagonalize(table4::equicorrelation(15, 0.3), Eigen::MatrixXd::Identity(15, 15));
    CHECK(d.lambdas(0) == doctest::Approx(5.2).epsilon(1e-12));
    for (int j = 1; j < 15; ++j) CHECK(d.lambdas(j) == doctest::Approx(0.7).epsilon(1e-12));
  }
  Eigen::MatrixXd bad = table4::equicorrelation(2, 1.2);
  CHECK_THROWS_AS(diagonalize(bad, Eigen::MatrixXd::Identity(2, 2)), NumericalError);
}

TEST_CASE("from_greeks maps delta through the transform") {
  JumpDiffusionSpec s = table4::spec();
  const Eigen::VectorXd a1 = Eigen::VectorXd::LinSpaced(15, 0.1, 1.5);
  const Eigen::MatrixXd A1 = Eigen::MatrixXd::Identity(15, 15);
  const auto p = QuadraticPortfolio::from_greeks(s, 0.01, a1, A1);
  const Eigen::VectorXd scale = s.sigma * std::sqrt(s.dt);
  const Eigen::VectorXd expected = p.C.transpose() * scale.asDiagonal() * a1;
  CHECK((p.b - expected).norm() < 1e-14);
  CHECK((p.C * p.C.transpose() - s.corr).cwiseAbs().maxCoeff() < 1e-10);
  s.sigma(3) = -1.0;
  CHECK_THROWS_AS(QuadraticPortfolio::from_greeks(s, 0.0, a1, A1), PreconditionError);
}

TEST_CASE("psi closed forms") {
  const auto spec = one_factor(1.0, 0.5);
  const LossModel m(diagonal(0.0, 1.0), spec);
  CHECK(m.quadratic_coefficients()(0) == doctest::Approx(0.5));
  CHECK(m.psi(0.0, 0.3) == 0.0);
  for (double t : {-0.5, 0.2, 0.7}) {
    CHECK(m.psi(t, 0.3) == doctest::Approx(-0.5 * std::log(1.0 - t) - 0.3 * t));
  }

  const LossModel t4(table4::portfolio(), table4::spec());
  const auto& c = t4.quadratic_coefficients();
  const double rate = 1.0 / 252.0;
  CHECK(t4.psi_prime(0.0, 0.824) == doctest::Approx(c.sum() + rate * 0.0 - 0.824));
  CHECK(t4.jump_rate() == doctest::Approx(rate));
}

TEST_CASE("psi' agrees with central differences over the strip") {
  const LossModel m(table4::portfolio(), table4::spec());
  const double strip = representable(m);
  for (int i = -20; i <= 20; ++i) {
    const double t = 0.9 * strip * i / 20.0;
    CAPTURE(t);
    const double h = 1e-6 * strip;
    const double d1 = oracle::central_difference([&](double x) { return m.psi(x, 1.166); }, t, h);
    const double d2 =
        oracle::central_difference([&](double x) { return m.psi_prime(x, 1.166); }, t, h);
    CHECK(std::fabs(d1 - m.psi_prime(t, 1.166)) <= 1e-6 * std::max(1.0, std::fabs(d1)));
    CHECK(std::fabs(d2 - m.psi_double_prime(t, 1.166)) <= 1e-5 * std::max(1.0, std::fabs(d2)));
  }
}

TEST_CASE("admissibility strip") {
  const LossModel m(table4::portfolio(), table4::spec());
  CHECK(m.admissible(0.99 * m.strip()));
  CHECK(m.admissible(-0.99 * m.strip()));
  CHECK_FALSE(m.admissible(m.strip()));
  try {
    m.psi(1.01 * m.strip(), 1.0);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("c_1") != std::string::npos);
  }
}

TEST_CASE("conjugate parameters") {
  const LossModel m(table4::portfolio(), table4::spec());
  const auto spec = table4::spec();
  const Eigen::VectorXd a1 = table4::portfolio().a1;
  const Eigen::VectorXd& b = table4::portfolio().b;
  const Eigen::VectorXd& c = m.quadratic_coefficients();
  const double t = 0.4 * representable(m);
  const auto bar = m.tilted(-t);
  for (int j = 0; j < 15; ++j) {
    CHECK(bar.mean(j) == doctest::Approx(-t * b(j) / (1.0 + 2.0 * t * c(j))).epsilon(1e-14));
    CHECK(bar.variance(j) == doctest::Approx(1.0 / (1.0 + 2.0 * t * c(j))).epsilon(1e-14));
  }
  const Eigen::VectorXd omega_a1 = spec.jump_covariance() * a1;
  const double v = a1.dot(omega_a1);
  CHECK(bar.intensity ==
        doctest::Approx(spec.jump_intensity * spec.dt * std::exp(-t * a1.dot(spec.eta) + 0.5 * t * t * v))
            .epsilon(1e-14));
  CHECK((bar.jump_mean - (spec.eta - t * omega_a1)).norm() < 1e-15);
}

TEST_CASE("likelihood ratio normalisation") {
  const LossModel m(table4::portfolio(), table4::spec());
  const double r = 1.0;
  for (double frac : {-0.6, 0.3, 0.85}) {
    const double t = frac * std::min(m.strip(), 10.0);
    CAPTURE(t);
    const auto params = m.tilted(t);
    const double log_norm = m.psi(t, r);
    const auto acc = blocked_moments(100000, 17, 1, [&](Rng& rng) {
      return std::exp(-t * (m.sample(params, rng) - r) + log_norm);
    });
    CHECK(std::fabs(acc.mean - 1.0) <= 4.0 * std::sqrt(acc.variance() / 1e5));
  }
}

TEST_CASE("sampler reductions") {
  SUBCASE("physical measure mean") {
    const LossModel m(table4::portfolio(), table4::spec());
    const auto acc = blocked_moments(100000, 3, 1, [&](Rng& rng) { return m.sample(m.tilted(0.0), rng); });
    const double mean = m.psi_prime(0.0, 0.0);
    CHECK(std::fabs(acc.mean - mean) <= 4.0 * std::sqrt(m.psi_double_prime(0.0, 0.0) / 1e5));
  }
  SUBCASE("linear loss is normal") {
    const auto spec = one_factor(0.2, 1.0);
    const auto p = diagonal(0.5, 0.0);
    const auto r = estimate_var_tail(p, spec, 0.0, 1.0, 1000, 100, 4);
    CHECK(std::fabs(r.p_hat - numerics::normal_sf(2.0)) <= 4.0 * r.std_err);
  }
  SUBCASE("pure quadratic loss is a scaled chi-square") {
    const auto spec = one_factor(0.2, 1.0);
    const auto p = diagonal(0.0, 2.0);
    const LossModel m(p, spec);
    const double c = m.quadratic_coefficients()(0);
    const double x = 0.4;
    const double exact = tail_probability(*make_family(ChiSquareSpec{1.0}), {x / c, Tail::Upper});
    const auto r = estimate_var_tail(m, 0.0, x, 1000, 100, 5);
    CHECK(std::fabs(r.p_hat - exact) <= 4.0 * r.std_err);
  }
}

TEST_CASE("exact tails of the fifteen-factor portfolio") {
  const LossModel m(table4::portfolio(), table4::spec());
  const auto p = table4::portfolio();
  const double expected[3] = {0.050070, 0.009984, 0.0010000};
  for (int i = 0; i < 3; ++i) {
    CHECK(table4::exact_tail(m, p, table4::kRp[i]) == doctest::Approx(expected[i]).epsilon(2e-3));
  }
}

TEST_CASE("solve_theta_p") {
  SUBCASE("normal reduction") {
    const double b = 0.5;
    const double r = 1.163;  // P = 0.01
    const auto spec = one_factor(0.2, 1.0);
    const auto res = solve_theta_p(diagonal(b, 0.0), spec, r, {}, 50000, 1);
    REQUIRE(res.ok());
    const double exact =
        solve_optimal_tilt(make_family(NormalSpec{b}), {r, Tail::Upper}).theta_star;
    CHECK(std::fabs(res.theta_star - exact) <= 0.01 * std::max(1.0, exact));
  }
  SUBCASE("doubling m stays within the conditional-mean error") {
    const LossModel m(table4::portfolio(), table4::spec());
    const auto small = solve_theta_p(m, 1.166, {}, 50000, 3);
    const auto large = solve_theta_p(m, 1.166, {}, 100000, 3);
    REQUIRE(small.solve.ok());
    REQUIRE(large.solve.ok());
    const double theta_se = small.conditional_mean_se / std::fabs(small.equation_slope);
    CHECK(std::fabs(large.solve.theta_star - small.solve.theta_star) <= 2.0 * theta_se);
    CHECK(small.hits >= 50);
  }
  SUBCASE("errors") {
    const LossModel m(table4::portfolio(), table4::spec());
    CHECK_THROWS_AS(solve_theta_p(m, -1.0, {}, 1000, 1), PreconditionError);
    CHECK_THROWS_AS(solve_theta_p(m, 1.549, {}, 20, 1), PreconditionError);
  }
}

TEST_CASE("estimate_var_tail") {
  const LossModel m(table4::portfolio(), table4::spec());
  const auto naive = estimate_var_tail(m, 0.0, 0.824, 1000, 50, 8);
  CHECK(naive.method == Method::Naive);
  CHECK(naive.batch == 1000);
  const auto solved = solve_theta_p(m, 0.824, {}, 50000, 2);
  const auto is = estimate_var_tail(m, solved.solve.theta_star, 0.824, 1000, 200, 9);
  CHECK(is.method == Method::ImportanceSampling);
  CHECK(std::fabs(is.p_hat - 0.050070) <= 3.0 * is.std_err);
  CHECK(is.p_hat == doctest::Approx(0.0501).epsilon(0.05));

  const auto w1 = estimate_var_tail(m, 10.0, 1.166, 500, 40, 11, 1);
  const auto w4 = estimate_var_tail(m, 10.0, 1.166, 500, 40, 11, 4);
  CHECK(w1.p_hat == w4.p_hat);
  CHECK(w1.variance == w4.variance);
}

TEST_CASE("find_var_quantile") {
  SUBCASE("normal reduction") {
    const auto spec = one_factor(0.2, 1.0);
    const auto p = diagonal(0.5, 0.0);
    const LossModel m(p, spec);
    QuantileBudget budget;
    budget.M = 50;
    budget.m = 20000;
    const auto q = find_var_quantile(m, 0.01, {}, budget);
    CHECK(q.converged);
    CHECK(std::fabs(numerics::normal_sf(q.r_p / 0.5) - 0.01) <= 3.0 * q.std_err);
  }
  SUBCASE("fifteen factors at p = 0.05") {
    const LossModel m(table4::portfolio(), table4::spec());
    QuantileBudget budget;
    budget.M = 50;
    budget.m = 20000;
    const auto q = find_var_quantile(m, 0.05, {}, budget);
    CHECK(q.converged);
    CHECK(std::fabs(table4::exact_tail(m, table4::portfolio(), q.r_p) - 0.05) <= 3.0 * q.std_err);
    CHECK(q.r_p == doctest::Approx(0.824).epsilon(0.03));
  }
  const LossModel m(table4::portfolio(), table4::spec());
  CHECK_THROWS_AS(find_var_quantile(m, 0.5, {}), PreconditionError);
  CHECK_THROWS_AS(find_var_quantile(m, 0.0, {}), PreconditionError);
}
