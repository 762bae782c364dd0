#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "tilt/tilt_core.hpp"

namespace tilt {

struct SolverConfig {
  double tol_rel = 1e-10;
  int max_iter = 200;
  std::optional<double> initial_theta;

  /// Throws PreconditionError unless tol_rel > 0 and max_iter >= 1.
  void validate() const;
};

enum class SolverStatus { Converged, AlternatingPair, DomainFailure };

const char* to_string(SolverStatus status) noexcept;

struct SolverResult {
  double theta_star = 0.0;
  SolverStatus status = SolverStatus::DomainFailure;
  int iterations = 0;
  std::vector<double> trace;
  /// The two limit points when status is AlternatingPair.
  double theta_low = 0.0;
  double theta_high = 0.0;

  bool ok() const noexcept { return status != SolverStatus::DomainFailure; }
};

/// Working interval of a scalar solve.
struct Bracket {
  double lo = -1e3;
  double hi = 1e3;
};

/// The literal recursion: t_i = g(theta_{i-1}), then theta_i solves h(theta) = t_i
/// by bisection on the bracket (clipped to the bracket end when t_i is out of
/// the range of h). If the iterates settle into a 2-cycle, or max_iter runs
/// out, the pair is reported and theta_star comes from bisection on g - h.
SolverResult solve_fixed_point(const std::function<double(double)>& g,
                               const std::function<double(double)>& h,
                               const SolverConfig& cfg = {}, Bracket bracket = {});

/// psi'(theta) = h(theta) with psi' increasing and h decreasing.
struct TiltEquation {
  std::function<double(double)> psi_prime;
  std::function<double(double)> h;
  /// F = psi' - h must be negative at lo; hi is grown (doubling, up to
  /// hi_limit) until F(hi) > 0.
  double lo = 0.0;
  double hi = 1.0;
  double hi_limit = 1e6;
  double initial = 0.0;
};

/// Solves a TiltEquation. The recursion runs in whichever orientation is
/// contractive at the initial point (theta_i = psi'^{-1}(h(theta_{i-1})) when
/// psi'' dominates |h'|, the literal one otherwise); theta_star is the
/// bisection root of F, which the recursion must reproduce.
SolverResult solve_tilt_equation(const TiltEquation& eq, const SolverConfig& cfg = {});

/// psi'(theta) = E_{Qbar_theta}[X | X in A]. Lower-tail events are solved on -X.
/// Throws PreconditionError when E[X | X in A] does not exceed the mean in
/// the direction of the tail.
SolverResult solve_optimal_tilt(const TiltingFamily& family, const TailEvent& event,
                                const SolverConfig& cfg = {});
SolverResult solve_optimal_tilt(const FamilyPtr& family, const TailEvent& event,
                                const SolverConfig& cfg = {});

/// Root of psi'(theta) = a. Throws DomainError if a is outside the range of psi'.
double large_deviation_tilt(const TiltingFamily& family, double a);

/// Root of mean + var * theta = E_{Qbar_theta}[X | X > a_n], the one-term
/// Taylor version of the optimality equation.
double moderate_deviation_tilt(double mean, double var, const TiltingFamily& family,
                               double a_n, const SolverConfig& cfg = {});

/// Index-tilted Pareto (Lomax, density alpha (1 + x)^{-alpha-1} on x > 0).
/// Solves mean + var * theta = E[X | X > a_n] under index alpha * theta and
/// returns alpha * theta.
double pareto_tail_tilt(double alpha, double a_n, double mean, double var);

/// E[X | X > a] for the Lomax law with index alpha > 1.
double pareto_conditional_mean(double alpha, double a);

}  // namespace tilt
