#pragma once

#include <cstdint>
#include <variant>

#include "tilt/tilt_core.hpp"

namespace tilt {

struct BinomialSpec {
  std::int64_t n = 1;
  double p = 0.5;
};
struct PoissonSpec {
  double lambda = 1.0;
};
/// N(0, sigma^2). Tilting by theta gives N(theta sigma^2, sigma^2).
struct NormalSpec {
  double sigma = 1.0;
};
/// Exponential with rate 1. Other rates: GammaSpec{1, scale}.
struct ExponentialSpec {};
struct ChiSquareSpec {
  double kappa = 1.0;
};
/// Gamma with shape alpha and scale beta.
struct GammaSpec {
  double alpha = 1.0;
  double beta = 1.0;
};
/// Noncentral chi-square with kappa degrees of freedom and noncentrality lambda.
struct NoncentralChiSquareSpec {
  double kappa = 1.0;
  double lambda = 0.0;
};
struct UniformSpec {};

using FamilySpec = std::variant<BinomialSpec, PoissonSpec, NormalSpec, ExponentialSpec,
                                ChiSquareSpec, GammaSpec, NoncentralChiSquareSpec,
                                UniformSpec>;

/// Throws PreconditionError on invalid parameters.
FamilyPtr make_family(const FamilySpec& spec);

/// R_t - r_p where R_t is a sum of N(t) ~ Pois(lambda t) jumps, each N(eta, delta2).
struct CompoundPoissonSpec {
  double lambda = 1.0;
  double horizon = 1.0;
  double eta = 0.0;
  double delta2 = 1.0;
  double offset = 0.0;
};

/// Extends TiltingFamily with the tilted jump count, for diagnostics and tests.
class CompoundPoissonFamily : public TiltingFamily {
 public:
  /// Mean of N(t) under Q_theta: lambda t exp(theta eta + theta^2 delta2 / 2).
  virtual double tilted_intensity(double theta) const = 0;
  /// One draw of (N(t), f(R_t)) under Q_theta.
  virtual std::pair<std::uint64_t, double> sample_tilted_with_count(double theta,
                                                                    Rng& rng) const = 0;
};

std::shared_ptr<const CompoundPoissonFamily> make_compound_poisson(
    const CompoundPoissonSpec& spec);

/// Optimal tilt of the rate-1 exponential above a: (sqrt(1 + a^2) - 1) / a.
double exponential_theta_star(double a);

/// theta - (phi(a + theta) / (1 - Phi(a + theta)) - theta). Its root in theta
/// is the optimal tilt of N(0, 1) above a.
double normal_tilt_equation(double a, double theta);

/// Noncentral chi-square density as a Poisson(lambda/2) mixture of central
/// chi-square densities, and the same density in modified-Bessel form.
double ncchi2_density_mixture(double kappa, double lambda, double x);
double ncchi2_density_bessel(double kappa, double lambda, double x);

}  // namespace tilt
