#pragma once

#include <cstdint>
#include <functional>

// Scalar special functions and root/quadrature helpers shared by the
// tilting families, the solver and the oracles.
namespace tilt::numerics {

double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;
/// 1 - Phi(x), accurate in the upper tail.
double normal_sf(double x) noexcept;
/// Upper-tail quantile: returns x with normal_sf(x) = q.
double normal_isf(double q);
/// phi(x) / (1 - Phi(x)), finite for all x (continued fraction for large x).
double inverse_mills(double x) noexcept;

/// Regularised incomplete gamma functions P(k, x) and Q(k, x).
double gamma_p(double k, double x);
double gamma_q(double k, double x);
/// x^(k-1) e^(-x) / Gamma(k).
double gamma_p_derivative(double k, double x);
double log_gamma(double x);

/// e^t / (e^t - 1) - 1/t with the removable singularity at 0 filled in.
/// Mean of the density proportional to e^{t y} on [0, 1].
double tilted_unit_mean(double t) noexcept;
/// Derivative of tilted_unit_mean: the variance of that density.
double tilted_unit_variance(double t) noexcept;
/// log((e^t - 1) / t), the log-normaliser of the same density.
double tilted_unit_log_norm(double t) noexcept;

/// Smallest i such that P(Poisson(mean) > i) < tail.
std::uint64_t poisson_truncation(double mean, double tail);
/// P(Poisson(mean) > i).
double poisson_sf(std::uint64_t i, double mean);

/// Root of a monotone function on [lo, hi] by bisection; f(lo) and f(hi)
/// must have opposite signs (or one of them is zero). Iterates until the
/// bracket is narrower than tol * max(1, |mid|) or cannot shrink further.
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double tol);

/// Adaptive 61-point Gauss-Kronrod on [lo, hi] (hi may be +inf, lo -inf).
/// Throws NumericalError if the error estimate exceeds max(abs_tol, rel_tol |I|).
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol = 1e-12, double rel_tol = 1e-10);

/// Tanh-sinh quadrature on a finite interval, for integrands with endpoint
/// singularities (chi-square and gamma densities near 0).
double integrate_endpoint_singular(const std::function<double(double)>& f, double lo,
                                   double hi, double rel_tol = 1e-10);

}  // namespace tilt::numerics
