#include <doctest.h>

#include <cmath>

#include "family_zoo.hpp"
#include "oracles.hpp"
#include "tilt/errors.hpp"
#include "tilt/estimator.hpp"
#include "tilt/families.hpp"
#include "tilt/numerics.hpp"
#include "tilt/parallel.hpp"
#include "tilt/solver.hpp"

using namespace tilt;

TEST_CASE("likelihood ratio examples") {
  const auto normal = make_family(NormalSpec{1.0});
  const auto expo = make_family(ExponentialSpec{});
  CHECK(likelihood_ratio(*normal, 0.0, 3.7) == 1.0);
  CHECK(likelihood_ratio(*normal, 1.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(likelihood_ratio(*expo, 0.5, 2.0) ==
        doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(likelihood_ratio(*expo, 1.5, 2.0), DomainError);
  CHECK_THROWS_AS(likelihood_ratio(*expo, 1.0, 2.0), DomainError);
}

TEST_CASE("conjugate view samples the tilt at -theta") {
  const auto normal = make_family(NormalSpec{1.0});
  const auto view = conjugate_view(normal, 2.0);
  CHECK(view.applied_tilt() == -2.0);
  const auto acc = blocked_moments(100000, 11, 1, [&](Rng& rng) { return view(rng); });
  CHECK(std::fabs(acc.mean + 2.0) < 4.0 * std::sqrt(1.0 / 1e5));
  CHECK(acc.variance() == doctest::Approx(1.0).epsilon(0.02));

  // chi2(kappa) at theta = 0.2 becomes Gamma(kappa/2, 2/1.4).
  const double kappa = 3.0;
  const auto chi = make_family(ChiSquareSpec{kappa});
  const auto chi_view = conjugate_view(chi, 0.2);
  const double scale = 2.0 / 1.4;
  const auto chi_acc = blocked_moments(100000, 12, 1, [&](Rng& rng) { return chi_view(rng); });
  const double mean = 0.5 * kappa * scale;
  const double var = 0.5 * kappa * scale * scale;
  CHECK(std::fabs(chi_acc.mean - mean) < 4.0 * std::sqrt(var / 1e5));
  CHECK(chi_acc.variance() == doctest::Approx(var).epsilon(0.03));

  // theta = 0 reproduces the base law stream for stream.
  const auto base_view = conjugate_view(chi, 0.0);
  Rng r1 = Rng::stream(5, 0);
  Rng r2 = Rng::stream(5, 0);
  CHECK(base_view(r1) == chi->sample_tilted(0.0, r2));

  // -theta must be admissible: chi2 at theta = -0.6 would need the tilt 0.6.
  CHECK_THROWS_AS(conjugate_view(chi, -0.6), DomainError);
}

TEST_CASE("G at zero is the tail probability and never below p squared") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const double p = tail_probability(*c.family, c.event);
    CHECK(variance_functional_G(*c.family, 0.0, c.event) == doctest::Approx(p).epsilon(1e-9));
    for (double frac : {0.1, 0.3, 0.6}) {
      const double t = frac * c.theta_hi;
      CHECK(variance_functional_G(*c.family, t, c.event) >= p * p);
    }
  }
}

TEST_CASE("tail probabilities match closed forms") {
  CHECK(tail_probability(*make_family(NormalSpec{1.0}), {2.326, Tail::Upper}) ==
        doctest::Approx(numerics::normal_sf(2.326)).epsilon(1e-9));
  CHECK(tail_probability(*make_family(ExponentialSpec{}), {4.6, Tail::Upper}) ==
        doctest::Approx(std::exp(-4.6)).epsilon(1e-9));
  CHECK(tail_probability(*make_family(ChiSquareSpec{1.0}), {6.635, Tail::Upper}) ==
        doctest::Approx(0.0100).epsilon(1e-3));
  CHECK(tail_probability(*make_family(UniformSpec{}), {0.99, Tail::Upper}) ==
        doctest::Approx(0.01).epsilon(1e-9));
  CHECK(tail_probability(*make_family(NormalSpec{1.0}), {-1.0, Tail::Lower}) ==
        doctest::Approx(numerics::normal_sf(1.0)).epsilon(1e-9));
}

TEST_CASE("G reproduces the Table 3 relative efficiency for NCchi2(2,1)") {
  const auto f = make_family(NoncentralChiSquareSpec{2.0, 1.0});
  const TailEvent event{12.85, Tail::Upper};
  const double p = tail_probability(*f, event);
  const double g = variance_functional_G(*f, 0.33, event);
  CHECK(p * (1.0 - p) / (g - p * p) == doctest::Approx(19.51).epsilon(0.02));
}

TEST_CASE("G minimiser on a grid matches the optimal tilt for N(0,1)") {
  const auto f = make_family(NormalSpec{1.0});
  const TailEvent event{2.326, Tail::Upper};
  const double grid = oracle::grid_minimize_G(*f, event, 0.0, 5.0, 501);
  const double theta = solve_optimal_tilt(*f, event).theta_star;
  CHECK(std::fabs(grid - theta) <= 0.01);
}

TEST_CASE("psi derivatives agree with finite differences") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const auto& f = *c.family;
    CHECK(std::fabs(f.psi(0.0)) < 1e-14);
    for (double t : {0.0, 0.25 * c.theta_hi, 0.5 * c.theta_hi, -0.25 * c.theta_hi}) {
      CAPTURE(t);
      const double h = 1e-5 * std::max(1.0, std::fabs(t)) * std::min(1.0, c.theta_hi);
      const double d1 = oracle::central_difference([&](double x) { return f.psi(x); }, t, h);
      const double d2 =
          oracle::central_difference([&](double x) { return f.psi_prime(x); }, t, h);
      CHECK(std::fabs(d1 - f.psi_prime(t)) <= 1e-6 * std::max(1.0, std::fabs(f.psi_prime(t))));
      CHECK(std::fabs(d2 - f.psi_double_prime(t)) <=
            1e-6 * std::max(1.0, std::fabs(f.psi_double_prime(t))));
    }
    CHECK(f.base_mean() == f.psi_prime(0.0));
    CHECK(f.base_var() == f.psi_double_prime(0.0));
    CHECK(f.base_var() > 0.0);
  }
}

TEST_CASE("psi' strictly increasing and conjugate conditional mean strictly decreasing") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const auto& f = *c.family;
    double prev_psi = -INFINITY;
    double prev_h = INFINITY;
    for (int i = 0; i <= 60; ++i) {
      const double t = c.theta_hi * (i / 60.0) * 0.98;
      const double d = f.psi_prime(t);
      CHECK(d > prev_psi);
      prev_psi = d;
      const double h = f.conditional_mean_conjugate(t, c.event.threshold);
      CHECK(h < prev_h);
      prev_h = h;
    }
  }
}

TEST_CASE("G is strictly convex on the admissible interval") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const auto& f = *c.family;
    const int points = 24;
    std::vector<double> g;
    const double step = 0.95 * c.theta_hi / points;
    for (int i = 0; i <= points; ++i) g.push_back(variance_functional_G(f, i * step, c.event));
    for (int i = 1; i < points; ++i) {
      CAPTURE(i);
      CHECK(g[i - 1] - 2.0 * g[i] + g[i + 1] > 0.0);
    }
  }
}

TEST_CASE("likelihood-ratio weighted indicator is unbiased for p") {
  for (const auto& c : zoo::cases()) {
    CAPTURE(c.label);
    const auto& f = *c.family;
    const double p = tail_probability(f, c.event);
    const double theta_star = solve_optimal_tilt(f, c.event).theta_star;
    std::uint64_t seed = 100;
    for (double t : {0.5 * theta_star, theta_star, 0.0}) {
      CAPTURE(t);
      const auto r = estimate_is(f, t, c.event, 100000, seed++);
      CHECK(std::fabs(r.p_hat - p) <= 4.0 * r.std_err);
    }
  }
}

TEST_CASE("lower-tail events go through negation") {
  const auto expo = make_family(ExponentialSpec{});
  const auto neg = negate(expo);
  CHECK(neg->domain().lower == -1.0);
  CHECK(neg->psi(-0.5) == doctest::Approx(expo->psi(0.5)));
  CHECK(neg->psi_prime(0.3) == doctest::Approx(-expo->psi_prime(-0.3)));
  const TailEvent lower{0.05, Tail::Lower};
  CHECK(tail_probability(*expo, lower) == doctest::Approx(-std::expm1(-0.05)).epsilon(1e-9));
  CHECK(tail_probability(*neg, lower.negated()) ==
        doctest::Approx(-std::expm1(-0.05)).epsilon(1e-9));
  CHECK(neg->conditional_mean(0.2, lower.negated()) ==
        doctest::Approx(-expo->conditional_mean(-0.2, lower)));
}

TEST_CASE("domain boundaries keep a relative margin") {
  const auto chi = make_family(ChiSquareSpec{2.0});
  const auto d = chi->domain();
  CHECK(d.contains(0.5 - 1e-8));
  CHECK_FALSE(d.contains(0.5 - 1e-10));
  CHECK(d.contains(-1e300));
  CHECK_THROWS_AS(chi->require_in_domain(0.5, "test"), DomainError);
}
