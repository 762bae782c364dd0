#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tilt/errors.hpp"
#include "tilt/families.hpp"
#include "tilt/numerics.hpp"

namespace tilt {

namespace {

double log_normal_sf(double z) {
  if (z < 5.0) return std::log(numerics::normal_sf(z));
  return -0.5 * z * z - 0.5 * std::log(2.0 * M_PI) - std::log(numerics::inverse_mills(z));
}

class CompoundPoisson final : public CompoundPoissonFamily {
 public:
  explicit CompoundPoisson(CompoundPoissonSpec s) : s_(s) {
    if (!(s.lambda > 0.0 && s.horizon > 0.0 && s.delta2 > 0.0)) {
      throw PreconditionError(
          "compound Poisson requires lambda > 0, horizon > 0 and delta2 > 0");
    }
  }

  std::string name() const override {
    std::ostringstream out;
    out << "CP(" << s_.lambda << ',' << s_.horizon << ',' << s_.eta << ',' << s_.delta2
        << ',' << s_.offset << ')';
    return out.str();
  }
  ThetaDomain domain() const override { return {}; }

  double tilted_intensity(double t) const override {
    return s_.lambda * s_.horizon * std::exp(t * s_.eta + 0.5 * t * t * s_.delta2);
  }
  double psi(double t) const override {
    return s_.lambda * s_.horizon * std::expm1(t * s_.eta + 0.5 * t * t * s_.delta2) -
           t * s_.offset;
  }
  double psi_prime(double t) const override {
    return tilted_intensity(t) * jump_mean(t) - s_.offset;
  }
  double psi_double_prime(double t) const override {
    const double m = jump_mean(t);
    return tilted_intensity(t) * (m * m + s_.delta2);
  }

  std::pair<std::uint64_t, double> sample_tilted_with_count(double t,
                                                            Rng& rng) const override {
    const auto n = std::poisson_distribution<std::uint64_t>(tilted_intensity(t))(rng);
    double r = 0.0;
    if (n > 0) {
      const double dn = static_cast<double>(n);
      r = dn * jump_mean(t) + std::sqrt(dn * s_.delta2) * rng.normal();
    }
    return {n, r - s_.offset};
  }
  double sample_tilted(double t, Rng& rng) const override {
    return sample_tilted_with_count(t, rng).second;
  }

  // Given N = n the value is N(n m - r_p, n delta2) (an atom at -r_p for
  // n = 0), so the conditional mean is a Poisson-weighted sum of truncated
  // normal means. Terms are accumulated in log space since far tilts push
  // every conditional probability below the double range.
  double conditional_mean(double t, const TailEvent& event) const override {
    const double mix = tilted_intensity(t);
    const double log_mix = std::log(mix);
    const double m = jump_mean(t);
    const bool upper = event.tail == Tail::Upper;
    const double c = event.threshold;

    double shift = -INFINITY;
    double den = 0.0;
    double num = 0.0;
    const auto add = [&](double log_w, double value) {
      if (log_w > shift) {
        const double scale = std::exp(shift - log_w);
        den *= scale;
        num *= scale;
        shift = log_w;
      }
      const double w = std::exp(log_w - shift);
      den += w;
      num += w * value;
    };

    if (event.contains(-s_.offset)) add(-mix, -s_.offset);
    for (std::uint64_t n = 1;; ++n) {
      const double dn = static_cast<double>(n);
      const double log_w = dn * log_mix - mix - numerics::log_gamma(dn + 1.0);
      const double mu = dn * m - s_.offset;
      const double sd = std::sqrt(dn * s_.delta2);
      const double z = upper ? (c - mu) / sd : (mu - c) / sd;
      const double excess = sd * numerics::inverse_mills(z);
      add(log_w + log_normal_sf(z), upper ? mu + excess : mu - excess);
      if (dn > mix) {
        const double tail = numerics::poisson_sf(n, mix);
        if (tail == 0.0 || std::log(tail) < shift + std::log(den) + std::log(1e-12)) break;
      }
      if (n > 10000000) throw NumericalError("compound Poisson series did not converge");
    }
    if (!(den > 0.0) || !std::isfinite(shift)) {
      throw DomainError(name() + ": event has probability zero under the tilted law");
    }
    return num / den;
  }

  double base_expectation(const std::function<double(double)>& f, const TailEvent& event,
                          double tilt) const override {
    const double base = s_.lambda * s_.horizon;
    double total = event.contains(-s_.offset) ? std::exp(-base) * f(-s_.offset) : 0.0;
    const auto last = numerics::poisson_truncation(std::max(base, tilted_intensity(tilt)),
                                                   1e-16) + 5;
    for (std::uint64_t n = 1; n <= last; ++n) {
      const double dn = static_cast<double>(n);
      const double w = std::exp(dn * std::log(base) - base - numerics::log_gamma(dn + 1.0));
      const double mu = dn * s_.eta - s_.offset;
      const double sd = std::sqrt(dn * s_.delta2);
      const double centre = mu + tilt * sd * sd;
      double lo = centre - 40.0 * sd;
      double hi = centre + 40.0 * sd;
      if (event.tail == Tail::Upper) {
        lo = std::max(lo, event.threshold);
        hi = std::max(hi, lo + 40.0 * sd);
      } else {
        hi = std::min(hi, event.threshold);
        lo = std::min(lo, hi - 40.0 * sd);
      }
      total += w * numerics::integrate(
                       [&](double y) {
                         return f(y) * numerics::normal_pdf((y - mu) / sd) / sd;
                       },
                       lo, hi, 1e-16, 1e-11);
    }
    return total;
  }

 private:
  double jump_mean(double t) const { return s_.eta + t * s_.delta2; }
  CompoundPoissonSpec s_;
};

}  // namespace

std::shared_ptr<const CompoundPoissonFamily> make_compound_poisson(
    const CompoundPoissonSpec& spec) {
  return std::make_shared<CompoundPoisson>(spec);
}

}  // namespace tilt
