#include "tilt/numerics.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tilt/errors.hpp"

namespace tilt::numerics {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kInvSqrt2 = 0.70710678118654752440;
}  // namespace

double normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_sf(double x) noexcept { return 0.5 * std::erfc(x * kInvSqrt2); }

double normal_isf(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("normal_isf: probability must lie in (0, 1)");
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

double inverse_mills(double x) noexcept {
  if (x < 5.0) return normal_pdf(x) / normal_sf(x);
  // Lentz evaluation of Q(x)/phi(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))).
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = x + k * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = x + k / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return f;
}

double gamma_p(double k, double x) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(k, x); }
double gamma_q(double k, double x) { return x <= 0.0 ? 1.0 : boost::math::gamma_q(k, x); }
double gamma_p_derivative(double k, double x) {
  return x <= 0.0 ? 0.0 : boost::math::gamma_p_derivative(k, x);
}
double log_gamma(double x) { return boost::math::lgamma(x); }

double tilted_unit_mean(double t) noexcept {
  if (std::fabs(t) < 1e-4) return 0.5 + t / 12.0 - t * t * t / 720.0;
  return -1.0 / std::expm1(-t) - 1.0 / t;
}

double tilted_unit_variance(double t) noexcept {
  if (std::fabs(t) < 1e-2) {
    const double t2 = t * t;
    return 1.0 / 12.0 - t2 / 240.0 + t2 * t2 / 6048.0;
  }
  const double s = std::sinh(0.5 * t);
  return 1.0 / (t * t) - 1.0 / (4.0 * s * s);
}

double tilted_unit_log_norm(double t) noexcept {
  if (std::fabs(t) < 1e-4) return t / 2.0 + t * t / 24.0;
  if (t > 0.0) return t + std::log1p(-std::exp(-t)) - std::log(t);
  return std::log(-std::expm1(t)) - std::log(-t);
}

double poisson_sf(std::uint64_t i, double mean) {
  if (mean <= 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(i) + 1.0, mean);
}

std::uint64_t poisson_truncation(double mean, double tail) {
  if (mean <= 0.0) return 0;
  auto i = static_cast<std::uint64_t>(std::floor(mean));
  while (poisson_sf(i, mean) >= tail) ++i;
  return i;
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    std::ostringstream msg;
    msg << "bisect_root: no sign change on [" << lo << ", " << hi << "] (f = " << flo
        << ", " << fhi << ")";
    throw DomainError(msg.str());
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= tol * std::max(1.0, std::fabs(mid))) break;
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol, double rel_tol) {
  if (!(hi > lo)) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, 25, rel_tol, &error, &l1);
  if (!std::isfinite(value) || error > std::max(abs_tol, 10.0 * rel_tol * l1)) {
    std::ostringstream msg;
    msg << "quadrature did not converge on [" << lo << ", " << hi << "]: value " << value
        << ", error estimate " << error << ", L1 " << l1;
    throw NumericalError(msg.str());
  }
  return value;
}

double integrate_endpoint_singular(const std::function<double(double)>& f, double lo,
                                   double hi, double rel_tol) {
  if (!(hi > lo)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(f, lo, hi, rel_tol, &error, &l1);
  if (!std::isfinite(value) || error > std::max(1e-12, 10.0 * rel_tol * l1)) {
    std::ostringstream msg;
    msg << "tanh-sinh quadrature did not converge on [" << lo << ", " << hi << "]: error "
        << error;
    throw NumericalError(msg.str());
  }
  return value;
}

}  // namespace tilt::numerics
