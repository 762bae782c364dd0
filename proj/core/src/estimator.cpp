#include "tilt/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tilt/errors.hpp"
#include "tilt/parallel.hpp"

namespace tilt {

namespace {

EstimateReport from_moments(const MomentAccumulator& acc, Method method, double theta,
                            std::uint64_t seed, const TiltingFamily& family,
                            const TailEvent& event) {
  EstimateReport r;
  r.p_hat = acc.mean;
  r.variance = acc.variance();
  r.n = acc.count;
  r.std_err = std::sqrt(r.variance / static_cast<double>(r.n));
  r.method = method;
  r.theta = theta;
  r.seed = seed;
  r.family = family.name();
  r.threshold = event.threshold;
  return r;
}

EstimateReport run(const TiltingFamily& family, double theta, const TailEvent& event,
                   std::uint64_t n, std::uint64_t seed, unsigned workers, Method method) {
  if (n < 1) throw PreconditionError("estimator requires n >= 1");
  family.require_in_domain(theta, "estimate_is");
  const double log_norm = theta == 0.0 ? 0.0 : family.psi(theta);
  const auto acc = blocked_moments(n, seed, workers, [&](Rng& rng) {
    const double x = family.sample_tilted(theta, rng);
    if (!event.contains(x)) return 0.0;
    return theta == 0.0 ? 1.0 : std::exp(-theta * x + log_norm);
  });
  return from_moments(acc, method, theta, seed, family, event);
}

}  // namespace

const char* to_string(Method method) noexcept {
  return method == Method::Naive ? "naive" : "is";
}

EstimateReport estimate_naive(const TiltingFamily& family, const TailEvent& event,
                              std::uint64_t n, std::uint64_t seed, unsigned workers) {
  return run(family, 0.0, event, n, seed, workers, Method::Naive);
}

EstimateReport estimate_is(const TiltingFamily& family, double theta, const TailEvent& event,
                           std::uint64_t n, std::uint64_t seed, unsigned workers) {
  return run(family, theta, event, n, seed, workers, Method::ImportanceSampling);
}

double analytic_re_star(const TiltingFamily& family, double theta, const TailEvent& event) {
  const double p = tail_probability(family, event);
  const double g = variance_functional_G(family, theta, event);
  const double excess = g - p * p;
  if (!(excess > 0.0)) {
    throw NumericalError("analytic_re_star: G(theta) - p^2 is not positive");
  }
  return p * (1.0 - p) / excess;
}

EfficiencyReport relative_efficiency(const EstimateReport& naive, const EstimateReport& is) {
  if (!(naive.variance > 0.0)) {
    throw NumericalError("relative_efficiency: naive estimate has zero variance (no hits)");
  }
  if (!(is.variance > 0.0)) {
    throw NumericalError(
        "relative_efficiency: importance-sampling estimate has zero variance (no hits)");
  }
  EfficiencyReport out;
  out.re_empirical = naive.variance / is.variance;
  out.re_star = std::numeric_limits<double>::quiet_NaN();
  out.p_reference = naive.p_hat;
  return out;
}

EfficiencyReport relative_efficiency(const EstimateReport& naive, const EstimateReport& is,
                                     const TiltingFamily& family, const TailEvent& event) {
  EfficiencyReport out = relative_efficiency(naive, is);
  out.p_reference = tail_probability(family, event);
  out.re_star = analytic_re_star(family, is.theta, event);
  return out;
}

EstimateReport estimate_two_sided(const TiltingFamily& family, double lower, double upper,
                                  std::uint64_t n, std::uint64_t seed,
                                  const SolverConfig& cfg, unsigned workers) {
  if (!(lower < upper)) throw PreconditionError("estimate_two_sided requires lower < upper");
  if (n < 2) throw PreconditionError("estimate_two_sided requires n >= 2");
  const TailEvent events[2] = {{upper, Tail::Upper}, {lower, Tail::Lower}};

  double theta[2];
  double weight[2];
  for (int s = 0; s < 2; ++s) {
    double ld = std::numeric_limits<double>::quiet_NaN();
    try {
      ld = large_deviation_tilt(family, events[s].threshold);
    } catch (const DomainError&) {
    }
    const SolverResult solved = solve_optimal_tilt(family, events[s], cfg);
    if (solved.ok()) {
      theta[s] = solved.theta_star;
    } else if (std::isfinite(ld) && family.domain().contains(ld)) {
      // No optimal tilt with an admissible conjugate; the dominating point still works.
      theta[s] = ld;
    } else {
      throw DomainError("estimate_two_sided: no admissible tilt for the stratum beyond " +
                        std::to_string(events[s].threshold));
    }
    if (!std::isfinite(ld)) ld = theta[s];
    weight[s] = std::exp(-ld * events[s].threshold);
  }
  const double share = weight[0] / (weight[0] + weight[1]);
  const auto n_upper = std::clamp<std::uint64_t>(
      static_cast<std::uint64_t>(std::llround(share * static_cast<double>(n))), 1, n - 1);
  const std::uint64_t counts[2] = {n_upper, n - n_upper};

  EstimateReport total;
  total.method = Method::ImportanceSampling;
  total.seed = seed;
  total.n = n;
  total.family = family.name();
  total.threshold = upper;
  total.theta = std::numeric_limits<double>::quiet_NaN();
  double var_of_mean = 0.0;
  for (int s = 0; s < 2; ++s) {
    EstimateReport part =
        estimate_is(family, theta[s], events[s], counts[s], derive_stream(seed, s), workers);
    total.p_hat += part.p_hat;
    var_of_mean += part.variance / static_cast<double>(part.n);
    total.strata.push_back(std::move(part));
  }
  total.variance = var_of_mean * static_cast<double>(n);
  total.std_err = std::sqrt(var_of_mean);
  return total;
}

EstimateReport estimate_two_sided(const TiltingFamily& family, double a, std::uint64_t n,
                                  std::uint64_t seed, const SolverConfig& cfg,
                                  unsigned workers) {
  if (!(a > 0.0)) throw PreconditionError("estimate_two_sided requires a > 0");
  return estimate_two_sided(family, -a, a, n, seed, cfg, workers);
}

EstimateReport summarize_replicates(const std::vector<double>& values, std::uint64_t batch,
                                    Method method, double theta, std::uint64_t seed) {
  if (values.empty()) throw PreconditionError("summarize_replicates: no replicates");
  MomentAccumulator acc;
  for (double v : values) acc.push(v);
  EstimateReport r;
  r.p_hat = acc.mean;
  r.variance = acc.sample_variance();
  r.n = acc.count;
  r.batch = batch;
  r.std_err = std::sqrt(r.variance / static_cast<double>(r.n));
  r.method = method;
  r.theta = theta;
  r.seed = seed;
  return r;
}

}  // namespace tilt
