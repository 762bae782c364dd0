#include "tilt/tilt_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "continuous_family.hpp"
#include "tilt/errors.hpp"
#include "tilt/numerics.hpp"

namespace tilt {

namespace {

double margin(double bound) {
  return ThetaDomain::kBoundaryMargin * std::max(1.0, std::fabs(bound));
}

class NegatedFamily final : public TiltingFamily {
 public:
  explicit NegatedFamily(FamilyPtr inner) : inner_(std::move(inner)) {}

  std::string name() const override { return "-" + inner_->name(); }
  ThetaDomain domain() const override {
    const ThetaDomain d = inner_->domain();
    return {-d.upper, -d.lower};
  }
  double psi(double theta) const override { return inner_->psi(-theta); }
  double psi_prime(double theta) const override { return -inner_->psi_prime(-theta); }
  double psi_double_prime(double theta) const override {
    return inner_->psi_double_prime(-theta);
  }
  double sample_tilted(double theta, Rng& rng) const override {
    return -inner_->sample_tilted(-theta, rng);
  }
  double conditional_mean(double theta, const TailEvent& event) const override {
    return -inner_->conditional_mean(-theta, event.negated());
  }
  double base_expectation(const std::function<double(double)>& f, const TailEvent& event,
                          double tilt) const override {
    return inner_->base_expectation([&f](double x) { return f(-x); }, event.negated(),
                                    -tilt);
  }

 private:
  FamilyPtr inner_;
};

}  // namespace

double ThetaDomain::clipped_lower() const noexcept {
  return std::isfinite(lower) ? lower + margin(lower) : lower;
}

double ThetaDomain::clipped_upper() const noexcept {
  return std::isfinite(upper) ? upper - margin(upper) : upper;
}

void TiltingFamily::require_in_domain(double theta, const char* what) const {
  const ThetaDomain d = domain();
  if (std::isfinite(theta) && d.contains(theta)) return;
  std::ostringstream msg;
  msg << what << ": theta = " << theta << " outside the domain (" << d.lower << ", "
      << d.upper << ") of " << name();
  throw DomainError(msg.str());
}

double likelihood_ratio(const TiltingFamily& family, double theta, double x) {
  family.require_in_domain(theta, "likelihood_ratio");
  if (theta == 0.0) return 1.0;
  return std::exp(-theta * x + family.psi(theta));
}

ConjugateSampler::ConjugateSampler(FamilyPtr family, double theta)
    : family_(std::move(family)), theta_(theta) {
  if (!family_) throw PreconditionError("conjugate_view: null family");
  family_->require_in_domain(-theta_, "conjugate_view");
}

ConjugateSampler conjugate_view(FamilyPtr family, double theta) {
  return ConjugateSampler(std::move(family), theta);
}

double variance_functional_G(const TiltingFamily& family, double theta,
                             const TailEvent& event) {
  family.require_in_domain(theta, "variance_functional_G");
  family.require_in_domain(-theta, "variance_functional_G (conjugate)");
  const double log_norm = family.psi(theta);
  return family.base_expectation(
      [theta, log_norm](double x) { return std::exp(-theta * x + log_norm); }, event,
      -theta);
}

double tail_probability(const TiltingFamily& family, const TailEvent& event) {
  return family.base_expectation([](double) { return 1.0; }, event, 0.0);
}

FamilyPtr negate(FamilyPtr family) {
  if (!family) throw PreconditionError("negate: null family");
  return std::make_shared<NegatedFamily>(std::move(family));
}

namespace detail {

double ContinuousFamily::base_expectation(const std::function<double(double)>& f,
                                          const TailEvent& event, double tilt) const {
  require_in_domain(tilt, "base_expectation");
  double lo = support_lower();
  double hi = support_upper();
  if (event.tail == Tail::Upper) {
    lo = std::max(lo, event.threshold);
  } else {
    hi = std::min(hi, event.threshold);
  }
  if (!(hi > lo)) return 0.0;

  // The integrand behaves like the Q_tilt density; 40 standard deviations
  // past its mean (or past the event boundary) carries negligible mass.
  const double centre = psi_prime(tilt);
  const double spread = 40.0 * std::sqrt(psi_double_prime(tilt));
  if (!std::isfinite(hi)) hi = std::max(lo, centre) + spread;
  if (!std::isfinite(lo)) lo = std::min(hi, centre) - spread;

  auto g = [&](double x) {
    const double d = density(x);
    return d == 0.0 ? 0.0 : f(x) * d;
  };

  std::vector<double> cuts{lo};
  if (centre > lo && centre < hi) cuts.push_back(centre);
  cuts.push_back(hi);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    if (i == 0 && singular_at_lower() && a == support_lower()) {
      total += numerics::integrate_endpoint_singular(g, a, b, 1e-11);
    } else {
      total += numerics::integrate(g, a, b, 1e-14, 1e-11);
    }
  }
  return total;
}

}  // namespace detail

}  // namespace tilt
