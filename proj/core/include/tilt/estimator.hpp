#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tilt/solver.hpp"
#include "tilt/tilt_core.hpp"

namespace tilt {

enum class Method { Naive, ImportanceSampling };

const char* to_string(Method method) noexcept;

/// Result of one Monte Carlo run. `variance` is the variance of a single
/// term (a weighted indicator, or for replicated protocols a single k-sample
/// estimate) and std_err = sqrt(variance / n).
struct EstimateReport {
  double p_hat = 0.0;
  double std_err = 0.0;
  double variance = 0.0;
  std::uint64_t n = 0;
  /// Samples behind each of the n terms: 1 for plain runs, k for replicated ones.
  std::uint64_t batch = 1;
  Method method = Method::Naive;
  double theta = 0.0;
  std::uint64_t seed = 0;
  std::string family;
  double threshold = 0.0;
  /// Per-stratum reports of a stratified run, empty otherwise.
  std::vector<EstimateReport> strata;
};

struct EfficiencyReport {
  double re_empirical = 0.0;
  double re_star = 0.0;
  double p_reference = 0.0;
};

/// Fraction of base-law samples in the event.
EstimateReport estimate_naive(const TiltingFamily& family, const TailEvent& event,
                              std::uint64_t n, std::uint64_t seed, unsigned workers = 0);

/// Mean of 1{X in A} exp(-theta X + psi(theta)) over n draws from Q_theta.
/// Sample b * kBlockSize + j is draw j of stream b, so the result does not
/// depend on `workers`.
EstimateReport estimate_is(const TiltingFamily& family, double theta, const TailEvent& event,
                           std::uint64_t n, std::uint64_t seed, unsigned workers = 0);

/// p(1 - p) / (G(theta) - p^2) with p and G from quadrature.
double analytic_re_star(const TiltingFamily& family, double theta, const TailEvent& event);

/// re_empirical = naive.variance / is.variance. re_star is filled from
/// analytic_re_star at is.theta when a family and event are supplied, NaN
/// otherwise. Throws NumericalError when either variance is zero.
EfficiencyReport relative_efficiency(const EstimateReport& naive, const EstimateReport& is);
EfficiencyReport relative_efficiency(const EstimateReport& naive, const EstimateReport& is,
                                     const TiltingFamily& family, const TailEvent& event);

/// P(X > upper) + P(X < lower), each stratum importance-sampled at its own
/// optimal tilt. Samples are split in proportion to exp(-theta_LD * threshold)
/// with theta_LD the large-deviation tilt of the stratum.
EstimateReport estimate_two_sided(const TiltingFamily& family, double lower, double upper,
                                  std::uint64_t n, std::uint64_t seed,
                                  const SolverConfig& cfg = {}, unsigned workers = 0);
/// The symmetric case {X > a} or {X < -a}.
EstimateReport estimate_two_sided(const TiltingFamily& family, double a, std::uint64_t n,
                                  std::uint64_t seed, const SolverConfig& cfg = {},
                                  unsigned workers = 0);

/// Mean and sample variance of replicate estimates, each built from `batch` samples.
EstimateReport summarize_replicates(const std::vector<double>& values, std::uint64_t batch,
                                    Method method, double theta, std::uint64_t seed);

}  // namespace tilt
