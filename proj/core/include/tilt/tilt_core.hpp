#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "tilt/rng.hpp"

namespace tilt {

/// Open interval of admissible tilts. Finite ends are kept at a relative
/// distance of kBoundaryMargin so psi is never evaluated at a pole.
struct ThetaDomain {
  static constexpr double kBoundaryMargin = 1e-9;

  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  double clipped_lower() const noexcept;
  double clipped_upper() const noexcept;
  bool contains(double theta) const noexcept {
    return theta >= clipped_lower() && theta <= clipped_upper();
  }
};

enum class Tail { Upper, Lower };

/// {X > threshold} (upper, canonical) or {X < threshold} (lower).
struct TailEvent {
  double threshold = 0.0;
  Tail tail = Tail::Upper;

  bool contains(double x) const noexcept {
    return tail == Tail::Upper ? x > threshold : x < threshold;
  }
  /// The same event expressed for -X.
  TailEvent negated() const noexcept {
    return {-threshold, tail == Tail::Upper ? Tail::Lower : Tail::Upper};
  }
};

/// A law P embedded in its exponential family dQ_theta/dP = exp(theta x - psi(theta)).
///
/// Implementations are immutable; every sampling call takes the generator
/// explicitly, so one instance can be shared by concurrent workers.
class TiltingFamily {
 public:
  virtual ~TiltingFamily() = default;

  virtual std::string name() const = 0;
  virtual ThetaDomain domain() const = 0;

  /// Cumulant generating function and its first two derivatives.
  virtual double psi(double theta) const = 0;
  virtual double psi_prime(double theta) const = 0;
  virtual double psi_double_prime(double theta) const = 0;

  /// One draw from Q_theta. At theta = 0 this is the base law.
  virtual double sample_tilted(double theta, Rng& rng) const = 0;

  /// E_{Q_theta}[X | X in event], from closed forms or truncated series.
  /// Throws DomainError if the event has zero probability.
  virtual double conditional_mean(double theta, const TailEvent& event) const = 0;

  /// E_P[1{X in event} f(X)] by deterministic quadrature (continuous laws)
  /// or summation (discrete laws) against the base law. `tilt` tells the
  /// integrator where f times the density concentrates: f is expected to
  /// grow like exp(tilt * x), so the mass sits around the Q_tilt mean.
  virtual double base_expectation(const std::function<double(double)>& f,
                                  const TailEvent& event, double tilt) const = 0;

  /// E_{Qbar_theta}[X | X > a] with Qbar_theta = Q_{-theta}.
  double conditional_mean_conjugate(double theta, double a) const {
    return conditional_mean(-theta, TailEvent{a, Tail::Upper});
  }
  double base_mean() const { return psi_prime(0.0); }
  double base_var() const { return psi_double_prime(0.0); }

  /// Throws DomainError naming `what` if theta is not admissible.
  void require_in_domain(double theta, const char* what) const;
};

using FamilyPtr = std::shared_ptr<const TiltingFamily>;

/// dP/dQ_theta at x: exp(-theta x + psi(theta)).
double likelihood_ratio(const TiltingFamily& family, double theta, double x);

/// Sampler for the conjugate measure Qbar_theta, which is Q_{-theta}.
class ConjugateSampler {
 public:
  ConjugateSampler(FamilyPtr family, double theta);

  double operator()(Rng& rng) const { return family_->sample_tilted(-theta_, rng); }
  /// The tilt actually applied, -theta.
  double applied_tilt() const noexcept { return -theta_; }
  const TiltingFamily& family() const noexcept { return *family_; }

 private:
  FamilyPtr family_;
  double theta_;
};

ConjugateSampler conjugate_view(FamilyPtr family, double theta);

/// G(theta) = E[1{X in A} exp(-theta X + psi(theta))], the second moment of
/// one importance-sampling term. Computed by quadrature against the base law.
double variance_functional_G(const TiltingFamily& family, double theta,
                             const TailEvent& event);

/// P(X in A) by quadrature against the base law.
double tail_probability(const TiltingFamily& family, const TailEvent& event);

/// The law of -X. Lower-tail events of X become upper-tail events of -X and
/// a tilt theta on -X is the tilt -theta on X.
FamilyPtr negate(FamilyPtr family);

}  // namespace tilt
