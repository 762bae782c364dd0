#include "tilt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tilt/errors.hpp"
#include "tilt/numerics.hpp"

namespace tilt {

namespace {

using Fn = std::function<double(double)>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool close(double x, double y, double tol) {
  return std::fabs(x - y) <= tol * std::max(1.0, std::fabs(y));
}

// Solves k(theta) = target on [lo, hi] for monotone k, clipping to the end
// of the bracket when the target is out of range.
double invert(const Fn& k, double target, double lo, double hi, bool increasing,
              double tol) {
  const double klo = k(lo) - target;
  const double khi = k(hi) - target;
  const double sign = increasing ? 1.0 : -1.0;
  if (sign * klo >= 0.0) return lo;
  if (sign * khi <= 0.0) return hi;
  return numerics::bisect_root([&](double t) { return k(t) - target; }, lo, hi, tol);
}

struct Recursion {
  SolverStatus status = SolverStatus::AlternatingPair;
  std::vector<double> trace;
};

// Iterates theta <- map(theta) until the step is below tolerance or the last
// four iterates form a 2-cycle. Running out of iterations without either is
// reported as an alternating pair of the last two iterates.
Recursion iterate(const Fn& map, double theta0, const SolverConfig& cfg) {
  Recursion out;
  out.trace.push_back(theta0);
  for (int i = 1; i <= cfg.max_iter; ++i) {
    const double prev = out.trace.back();
    const double next = map(prev);
    out.trace.push_back(next);
    if (close(next, prev, cfg.tol_rel)) {
      out.status = SolverStatus::Converged;
      return out;
    }
    const std::size_t n = out.trace.size();
    if (n >= 4 && close(out.trace[n - 1], out.trace[n - 3], cfg.tol_rel) &&
        close(out.trace[n - 2], out.trace[n - 4], cfg.tol_rel)) {
      break;
    }
  }
  return out;
}

void set_pair(SolverResult& r) {
  const std::size_t n = r.trace.size();
  const double a = r.trace[n - 1];
  const double b = n >= 2 ? r.trace[n - 2] : a;
  r.theta_low = std::min(a, b);
  r.theta_high = std::max(a, b);
}

SolverResult domain_failure(std::vector<double> trace = {}) {
  SolverResult r;
  r.theta_star = kNaN;
  r.status = SolverStatus::DomainFailure;
  r.trace = std::move(trace);
  return r;
}

// Non-owning handle, for reusing FamilyPtr-based helpers on a reference.
FamilyPtr borrow(const TiltingFamily& family) {
  return FamilyPtr(&family, [](const TiltingFamily*) {});
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol_rel > 0.0)) throw PreconditionError("solver tol_rel must be positive");
  if (max_iter < 1) throw PreconditionError("solver max_iter must be at least 1");
}

const char* to_string(SolverStatus status) noexcept {
  switch (status) {
    case SolverStatus::Converged:
      return "converged";
    case SolverStatus::AlternatingPair:
      return "alternating_pair";
    case SolverStatus::DomainFailure:
      return "domain_failure";
  }
  return "unknown";
}

SolverResult solve_fixed_point(const Fn& g, const Fn& h, const SolverConfig& cfg,
                               Bracket bracket) {
  cfg.validate();
  if (!(std::isfinite(bracket.lo) && std::isfinite(bracket.hi) && bracket.lo < bracket.hi)) {
    throw PreconditionError("solve_fixed_point needs a finite bracket with lo < hi");
  }
  const Fn F = [&](double t) { return g(t) - h(t); };
  if (F(bracket.lo) > 0.0 || F(bracket.hi) < 0.0) return domain_failure();

  const double inner_tol = 1e-3 * cfg.tol_rel;
  const double theta0 =
      std::clamp(cfg.initial_theta.value_or(0.5 * (bracket.lo + bracket.hi)), bracket.lo,
                 bracket.hi);
  auto rec = iterate(
      [&](double t) { return invert(h, g(t), bracket.lo, bracket.hi, false, inner_tol); },
      theta0, cfg);

  SolverResult r;
  r.status = rec.status;
  r.trace = std::move(rec.trace);
  r.iterations = static_cast<int>(r.trace.size()) - 1;
  if (r.status == SolverStatus::Converged) {
    r.theta_star = r.trace.back();
  } else {
    set_pair(r);
    r.theta_star = numerics::bisect_root(F, bracket.lo, bracket.hi, inner_tol);
  }
  return r;
}

SolverResult solve_tilt_equation(const TiltEquation& eq, const SolverConfig& cfg) {
  cfg.validate();
  const Fn F = [&](double t) { return eq.psi_prime(t) - eq.h(t); };
  const double lo = eq.lo;
  const double f_lo = F(lo);
  if (f_lo == 0.0) {
    SolverResult r;
    r.theta_star = lo;
    r.status = SolverStatus::Converged;
    r.trace = {lo};
    return r;
  }
  if (!(f_lo < 0.0)) return domain_failure();

  double hi = std::min(std::max(eq.hi, lo + 1e-12), eq.hi_limit);
  while (!(F(hi) > 0.0)) {
    if (hi >= eq.hi_limit) return domain_failure();
    hi = std::min(lo + 2.0 * (hi - lo), eq.hi_limit);
  }

  const double inner_tol = 1e-3 * cfg.tol_rel;
  const double root = numerics::bisect_root(F, lo, hi, inner_tol);
  const double theta0 = std::clamp(eq.initial, lo, hi);

  // Local slopes decide which composition is a contraction.
  const double step = 1e-6 * std::max(1.0, std::fabs(theta0));
  const double a = std::max(lo, theta0 - step);
  const double b = std::min(hi, theta0 + step);
  const double slope_psi = (eq.psi_prime(b) - eq.psi_prime(a)) / (b - a);
  const double slope_h = std::fabs((eq.h(b) - eq.h(a)) / (b - a));

  Fn map;
  if (slope_psi >= slope_h) {
    map = [&](double t) { return invert(eq.psi_prime, eq.h(t), lo, hi, true, inner_tol); };
  } else {
    map = [&](double t) { return invert(eq.h, eq.psi_prime(t), lo, hi, false, inner_tol); };
  }
  auto rec = iterate(map, theta0, cfg);

  SolverResult r;
  r.status = rec.status;
  r.trace = std::move(rec.trace);
  r.iterations = static_cast<int>(r.trace.size()) - 1;
  r.theta_star = root;
  if (r.status != SolverStatus::Converged) set_pair(r);
  return r;
}

SolverResult solve_optimal_tilt(const TiltingFamily& family, const TailEvent& event,
                                const SolverConfig& cfg) {
  cfg.validate();
  if (event.tail == Tail::Lower) {
    const FamilyPtr flipped = negate(borrow(family));
    SolverConfig c = cfg;
    if (c.initial_theta) c.initial_theta = -*c.initial_theta;
    SolverResult r = solve_optimal_tilt(*flipped, event.negated(), c);
    r.theta_star = -r.theta_star;
    for (double& t : r.trace) t = -t;
    std::swap(r.theta_low, r.theta_high);
    r.theta_low = -r.theta_low;
    r.theta_high = -r.theta_high;
    return r;
  }

  const double mu = family.psi_prime(0.0);
  const double h0 = family.conditional_mean(0.0, event);
  if (!(h0 > mu)) {
    std::ostringstream msg;
    msg << "solve_optimal_tilt: E[X | X > " << event.threshold << "] = " << h0
        << " does not exceed the mean " << mu << " of " << family.name()
        << "; the event is not rare in the upper direction";
    throw PreconditionError(msg.str());
  }

  const ThetaDomain d = family.domain();
  const double hi_max = std::min(d.clipped_upper(), -d.clipped_lower());

  double initial = 0.0;
  if (cfg.initial_theta) {
    initial = *cfg.initial_theta;
  } else {
    try {
      initial = large_deviation_tilt(family, event.threshold);
    } catch (const DomainError&) {
      initial = -1.0;
    }
    if (!(initial > 0.0 && initial < hi_max)) {
      initial = std::isfinite(hi_max) ? 0.5 * hi_max : 1.0;
    }
  }

  TiltEquation eq;
  eq.psi_prime = [&](double t) { return family.psi_prime(t); };
  eq.h = [&](double t) { return family.conditional_mean(-t, event); };
  eq.lo = 0.0;
  if (std::isfinite(hi_max)) {
    eq.hi = eq.hi_limit = hi_max;
  } else {
    eq.hi = std::max(1.0, 2.0 * std::fabs(initial));
  }
  eq.initial = std::clamp(initial, 0.0, std::isfinite(hi_max) ? hi_max : 1e300);
  return solve_tilt_equation(eq, cfg);
}

SolverResult solve_optimal_tilt(const FamilyPtr& family, const TailEvent& event,
                                const SolverConfig& cfg) {
  if (!family) throw PreconditionError("solve_optimal_tilt: null family");
  return solve_optimal_tilt(*family, event, cfg);
}

double large_deviation_tilt(const TiltingFamily& family, double a) {
  const auto f = [&](double t) { return family.psi_prime(t) - a; };
  const double f0 = f(0.0);
  if (f0 == 0.0) return 0.0;
  const ThetaDomain d = family.domain();
  const double bound = f0 < 0.0 ? d.clipped_upper() : d.clipped_lower();
  double far = f0 < 0.0 ? 1.0 : -1.0;
  if (std::fabs(far) > std::fabs(bound)) far = bound;
  while ((f(far) < 0.0) == (f0 < 0.0)) {
    if (far == bound || std::fabs(far) > 1e6) {
      std::ostringstream msg;
      msg << "large_deviation_tilt: a = " << a << " is outside the range of psi' for "
          << family.name();
      throw DomainError(msg.str());
    }
    far *= 2.0;
    if (std::fabs(far) > std::fabs(bound)) far = bound;
  }
  return f0 < 0.0 ? numerics::bisect_root(f, 0.0, far, 1e-15)
                  : numerics::bisect_root(f, far, 0.0, 1e-15);
}

double moderate_deviation_tilt(double mean, double var, const TiltingFamily& family,
                               double a_n, const SolverConfig& cfg) {
  if (!(var > 0.0)) throw PreconditionError("moderate_deviation_tilt requires var > 0");
  const TailEvent event{a_n, Tail::Upper};
  const ThetaDomain d = family.domain();
  const double hi_max = -d.clipped_lower();

  TiltEquation eq;
  eq.psi_prime = [&](double t) { return mean + var * t; };
  eq.h = [&](double t) { return family.conditional_mean(-t, event); };
  eq.lo = 0.0;
  eq.hi = std::isfinite(hi_max) ? hi_max : 1.0;
  eq.hi_limit = std::isfinite(hi_max) ? hi_max : 1e6;
  eq.initial = cfg.initial_theta.value_or(std::max(0.0, (a_n - mean) / var));
  const SolverResult r = solve_tilt_equation(eq, cfg);
  if (!r.ok()) {
    std::ostringstream msg;
    msg << "moderate_deviation_tilt: no root for a_n = " << a_n << " on " << family.name();
    throw DomainError(msg.str());
  }
  return r.theta_star;
}

double pareto_conditional_mean(double alpha, double a) {
  if (!(alpha > 1.0)) throw DomainError("pareto_conditional_mean requires alpha > 1");
  const double base = std::max(a, 0.0);
  return (1.0 + base) * alpha / (alpha - 1.0) - 1.0;
}

double pareto_tail_tilt(double alpha, double a_n, double mean, double var) {
  if (!(alpha > 2.0)) {
    throw PreconditionError("pareto_tail_tilt requires alpha > 2 (finite mean and variance)");
  }
  if (!(var > 0.0)) throw PreconditionError("pareto_tail_tilt requires var > 0");
  const auto F = [&](double t) {
    return mean + var * t - pareto_conditional_mean(alpha * t, a_n);
  };
  // F -> -inf as alpha * theta -> 1 and F -> +inf as theta grows.
  const double lo = (1.0 + 1e-12) / alpha;
  double hi = std::max(1.0, 2.0 * lo);
  while (!(F(hi) > 0.0)) {
    hi *= 2.0;
    if (hi > 1e12) throw DomainError("pareto_tail_tilt: no root");
  }
  return alpha * numerics::bisect_root(F, lo, hi, 1e-15);
}

}  // namespace tilt
