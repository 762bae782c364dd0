#include <doctest.h>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "family_zoo.hpp"
#include "oracles.hpp"
#include "tilt/errors.hpp"
#include "tilt/families.hpp"
#include "tilt/solver.hpp"

using namespace tilt;

namespace {

double relative_residual(const TiltingFamily& f, const TailEvent& ev, double t) {
  const double lhs = f.psi_prime(t);
  return std::fabs(lhs - f.conditional_mean_conjugate(t, ev.threshold)) /
         std::max(1.0, std::fabs(lhs));
}

}  // namespace

TEST_CASE("fixed point: linear crossing") {
  const auto g = [](double t) { return t; };
  const auto h = [](double t) { return 1.0 - t; };
  const auto r = solve_fixed_point(g, h, {}, {0.0, 1.0});
  CHECK(r.status == SolverStatus::Converged);
  CHECK(r.theta_star == doctest::Approx(0.5).epsilon(1e-10));

  const auto wide = solve_fixed_point(g, h);
  CHECK(wide.theta_star == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("fixed point: alternating pair") {
  // theta_i = 1 - theta_{i-1}: started at 0 the iterates swap between 0 and 1.
  const auto g = [](double t) { return t; };
  const auto h = [](double t) { return 1.0 - t; };
  SolverConfig cfg;
  cfg.initial_theta = 0.0;
  const auto r = solve_fixed_point(g, h, cfg, {0.0, 1.0});
  REQUIRE(r.status == SolverStatus::AlternatingPair);
  CHECK(r.theta_low == doctest::Approx(0.0));
  CHECK(r.theta_high == doctest::Approx(1.0));
  CHECK(g(r.theta_low) == doctest::Approx(h(r.theta_high)));
  CHECK(h(r.theta_low) == doctest::Approx(g(r.theta_high)));
  CHECK(r.theta_star == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::string(to_string(r.status)) == "alternating_pair");
}

TEST_CASE("fixed point: exponential optimality equation") {
  const double a = 2.0;
  const auto g = [](double t) { return 1.0 / (1.0 - t); };
  const auto h = [a](double t) { return a + 1.0 / (1.0 + t); };
  SolverConfig cfg;
  cfg.initial_theta = 0.5;
  const auto r = solve_fixed_point(g, h, cfg, {0.0, 0.99});
  CHECK(r.ok());
  CHECK(r.theta_star == doctest::Approx(0.618034).epsilon(1e-6));
}

TEST_CASE("fixed point: no sign change is a domain failure") {
  const auto r = solve_fixed_point([](double t) { return t + 10.0; },
                                   [](double t) { return -t; }, {}, {0.0, 1.0});
  CHECK(r.status == SolverStatus::DomainFailure);
  CHECK_FALSE(r.ok());
  SolverConfig bad;
  bad.tol_rel = 0.0;
  CHECK_THROWS_AS(solve_fixed_point([](double t) { return t; }, [](double t) { return -t; }, bad),
                  PreconditionError);
}

TEST_CASE("optimal tilt examples") {
  const auto expo = make_family(ExponentialSpec{});
  const auto r = solve_optimal_tilt(expo, {2.0, Tail::Upper});
  CHECK(r.status == SolverStatus::Converged);
  CHECK(r.theta_star == doctest::Approx(exponential_theta_star(2.0)).epsilon(1e-9));

  const auto nc = make_family(NoncentralChiSquareSpec{2.0, 1.0});
  CHECK(std::fabs(solve_optimal_tilt(nc, {12.85, Tail::Upper}).theta_star - 0.33) <= 0.005);

  const auto normal = make_family(NormalSpec{1.0});
  const double t6 = solve_optimal_tilt(normal, {6.0, Tail::Upper}).theta_star;
  CHECK(std::fabs(t6 - 6.0) <= 0.3);
  const double grid = oracle::grid_minimize_G(*normal, {6.0, Tail::Upper}, 5.0, 7.0, 401);
  CHECK(std::fabs(grid - t6) <= 0.01);
}

TEST_CASE("optimal tilt precondition and lower tails") {
  const auto uni = make_family(UniformSpec{});
  CHECK_THROWS_AS(solve_optimal_tilt(uni, {-1.0, Tail::Upper}), PreconditionError);

  const auto normal = make_family(NormalSpec{1.0});
  const auto up = solve_optimal_tilt(normal, {2.326, Tail::Upper});
  const auto low = solve_optimal_tilt(normal, {-2.326, Tail::Lower});
  REQUIRE(low.ok());
  CHECK(low.theta_star == doctest::Approx(-up.theta_star).epsilon(1e-9));

  const auto pois = make_family(PoissonSpec{10.0});
  const TailEvent left{3.0, Tail::Lower};
  const auto g = solve_optimal_tilt(pois, left);
  REQUIRE(g.ok());
  CHECK(g.theta_star < 0.0);
  const double g_star = variance_functional_G(*pois, g.theta_star, left);
  for (double s : {0.9, 1.1}) {
    CHECK(variance_functional_G(*pois, s * g.theta_star, left) > g_star);
  }

  // Lower tails of E(1) and the gamma family need a conjugate tilt beyond the pole at 1.
  const auto expo = make_family(ExponentialSpec{});
  CHECK(solve_optimal_tilt(expo, {0.05, Tail::Lower}).status == SolverStatus::DomainFailure);
}

TEST_CASE("large deviation tilt") {
  CHECK(large_deviation_tilt(*make_family(NormalSpec{1.0}), 3.0) == doctest::Approx(3.0));
  const auto expo = make_family(ExponentialSpec{});
  CHECK(large_deviation_tilt(*expo, 2.0) == doctest::Approx(0.5));
  CHECK(large_deviation_tilt(*expo, 1.0) == doctest::Approx(0.0));
  CHECK(large_deviation_tilt(*expo, 0.5) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(large_deviation_tilt(*expo, -1.0), DomainError);
  CHECK_THROWS_AS(large_deviation_tilt(*make_family(UniformSpec{}), 1.5), DomainError);
}

TEST_CASE("moderate deviation tilt") {
  const auto normal = make_family(NormalSpec{1.0});
  for (double a : {0.5, 1.0, 2.326}) {
    CAPTURE(a);
    CHECK(moderate_deviation_tilt(0.0, 1.0, *normal, a) ==
          doctest::Approx(solve_optimal_tilt(normal, {a, Tail::Upper}).theta_star).epsilon(1e-8));
  }

  // E(1) at a_n = 1.2: the linearised equation mean + var theta replaces
  // 1 / (1 - theta), which is much flatter, so its root overshoots the exact one.
  const auto expo = make_family(ExponentialSpec{});
  const double lin = moderate_deviation_tilt(1.0, 1.0, *expo, 1.2);
  const double exact = exponential_theta_star(1.2);
  CHECK(exact == doctest::Approx(0.4684).epsilon(1e-3));
  CHECK(lin > exact);
  // (1 + theta)^2 - 1.2 (1 + theta) - 1 = 0.
  CHECK(lin == doctest::Approx(0.5 * (1.2 + std::sqrt(1.44 + 4.0)) - 1.0).epsilon(1e-8));

  // Shrinking the event towards the mean drives the root to a small value continuously.
  double prev = INFINITY;
  for (double a : {1.0, 0.5, 0.1, 0.01, 0.001}) {
    const double t = moderate_deviation_tilt(0.0, 1.0, *normal, a);
    CHECK(t < prev);
    prev = t;
  }
  CHECK(std::fabs(moderate_deviation_tilt(0.0, 1.0, *normal, 0.0) -
                  moderate_deviation_tilt(0.0, 1.0, *normal, 1e-6)) < 1e-5);
}

TEST_CASE("Pareto index tilting") {
  const double alpha = 3.0;
  const double mean = 1.0 / (alpha - 1.0);
  const double var = alpha / ((alpha - 1.0) * (alpha - 1.0) * (alpha - 2.0));
  CHECK_THROWS_AS(pareto_tail_tilt(2.0, 1.0, 1.0, 1.0), PreconditionError);

  const double a_n = 1.0;
  const double tilted = pareto_tail_tilt(alpha, a_n, mean, var);
  const double theta = tilted / alpha;
  CHECK(pareto_conditional_mean(tilted, a_n) == doctest::Approx(mean + var * theta).epsilon(1e-8));

  // The truncated mean from the closed form against quadrature of the tail.
  const double num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return x * tilted * std::pow(1.0 + x, -tilted - 1.0); }, a_n, INFINITY, 15,
      1e-13);
  const double den = std::pow(1.0 + a_n, -tilted);
  CHECK(num / den == doctest::Approx(pareto_conditional_mean(tilted, a_n)).epsilon(1e-8));

  // theta = 1 exactly when the untilted conditional mean equals mean + var.
  const double a_one = (mean + var + 1.0) * (alpha - 1.0) / alpha - 1.0;
  CHECK(pareto_tail_tilt(alpha, a_one, mean, var) == doctest::Approx(alpha).epsilon(1e-10));

  // The index moves up whenever E[X | X > a_n] exceeds mean + var, down otherwise.
  for (double a : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    CAPTURE(a);
    const double t = pareto_tail_tilt(alpha, a, mean, var);
    const bool heavier = pareto_conditional_mean(alpha, a) > mean + var;
    CHECK((t > alpha) == heavier);
  }
}

TEST_CASE("grid search of G agrees with the solver for every family") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const double p = tail_probability(*c.family, c.event);
    REQUIRE(p >= 1e-4);
    REQUIRE(p <= 0.1);
    const int points = 2000;
    const double step = c.theta_hi / (points - 1);
    const double grid = oracle::grid_minimize_G(*c.family, c.event, 0.0, c.theta_hi, points);
    const double theta = solve_optimal_tilt(c.family, c.event).theta_star;
    CHECK(std::fabs(grid - theta) <= step);
  }
}

TEST_CASE("F has exactly one sign change and increases") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const auto& f = *c.family;
    const auto F = [&](double t) {
      return f.psi_prime(t) - f.conditional_mean_conjugate(t, c.event.threshold);
    };
    int changes = 0;
    double prev = F(0.0);
    CHECK(prev < 0.0);
    for (int i = 1; i <= 200; ++i) {
      const double t = 0.99 * c.theta_hi * i / 200.0;
      const double v = F(t);
      CHECK(v > prev);
      if ((v > 0.0) != (prev > 0.0)) ++changes;
      prev = v;
    }
    CHECK(changes == 1);
  }
}

TEST_CASE("recursion trace approaches the root or reports a pair") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const auto r = solve_optimal_tilt(c.family, c.event);
    REQUIRE(r.ok());
    if (r.status == SolverStatus::Converged) {
      CHECK(relative_residual(*c.family, c.event, r.theta_star) <= 10 * SolverConfig{}.tol_rel);
      const double tol = 10 * SolverConfig{}.tol_rel * std::max(1.0, r.theta_star);
      for (std::size_t i = 2; i < r.trace.size(); ++i) {
        CHECK(std::fabs(r.trace[i] - r.theta_star) <=
              std::fabs(r.trace[i - 1] - r.theta_star) + tol);
      }
      CHECK(std::fabs(r.trace.back() - r.theta_star) <= tol);
    } else {
      CHECK(r.status == SolverStatus::AlternatingPair);
      CHECK(r.theta_low <= r.theta_star);
      CHECK(r.theta_star <= r.theta_high);
    }
  }
}

TEST_CASE("result does not depend on the initial point") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const double base = solve_optimal_tilt(c.family, c.event).theta_star;
    for (double s : {0.5, 1.5}) {
      SolverConfig cfg;
      cfg.initial_theta = s * base;
      const auto r = solve_optimal_tilt(c.family, c.event, cfg);
      CHECK(r.ok());
      CHECK(std::fabs(r.theta_star - base) <= 10 * cfg.tol_rel * std::max(1.0, base));
    }
  }
}

TEST_CASE("noncentral chi-square optimal tilts across thresholds") {
  const auto f = make_family(NoncentralChiSquareSpec{5.0, 5.0});
  boost::math::non_central_chi_squared dist(5.0, 5.0);
  double prev = 0.0;
  for (double p : {0.1, 0.01, 0.001, 1e-4}) {
    const double a = boost::math::quantile(boost::math::complement(dist, p));
    const double t = solve_optimal_tilt(f, {a, Tail::Upper}).theta_star;
    CHECK(t > prev);
    CHECK(t < 0.5);
    prev = t;
  }
}
