#include "tilt/bootstrap.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "tilt/errors.hpp"
#include "tilt/families.hpp"
#include "tilt/numerics.hpp"
#include "tilt/parallel.hpp"

namespace tilt {

namespace {

void require_admissible(double theta, int p, const char* what) {
  if (std::isfinite(theta) && std::fabs(theta) < 0.5 * p * (1.0 - ThetaDomain::kBoundaryMargin)) {
    return;
  }
  std::ostringstream msg;
  msg << what << ": theta = " << theta << " violates 1 -+ 2 theta / p > 0 with p = " << p;
  throw DomainError(msg.str());
}

// One tilted draw of T* and its importance weight.
class TiltedStatistic {
 public:
  TiltedStatistic(const RegressionProblem& problem, const BootstrapStatistic& stat,
                  ResampleFamily family)
      : n_(static_cast<int>(problem.n())),
        p_(stat.p),
        a_(stat.a),
        theta_(stat.theta),
        sigma2_(problem.sigma2),
        family_(family) {
    if (stat.p < 1) throw PreconditionError("bootstrap statistic needs p >= 1");
    if (!(problem.sigma2 > 0.0)) throw PreconditionError("bootstrap needs sigma2 > 0");
    require_admissible(theta_, p_, "resample_tilted");
    shrink_ = 1.0 - 2.0 * theta_ / p_;
    log_norm_ = bootstrap_psi(a_, n_, p_, theta_).first;
  }

  double weight(Rng& rng) const {
    double t = 0.0;
    if (family_ == ResampleFamily::Normal) {
      const double sd = std::sqrt(sigma2_ / shrink_);
      double ss = 0.0;
      for (int i = 0; i < n_; ++i) {
        const double e = sd * rng.normal();
        ss += e * e;
      }
      t = ss / (p_ * sigma2_);
    } else {
      std::gamma_distribution<double> chi1(0.5, 2.0 / shrink_);
      double s = 0.0;
      for (int i = 0; i < n_; ++i) s += chi1(rng);
      t = s / p_;
    }
    if (!(t > a_)) return 0.0;
    return theta_ == 0.0 ? 1.0 : std::exp(-theta_ * (t - a_) + log_norm_);
  }

 private:
  int n_;
  int p_;
  double a_;
  double theta_;
  double sigma2_;
  ResampleFamily family_;
  double shrink_ = 1.0;
  double log_norm_ = 0.0;
};

}  // namespace

double RegressionProblem::divisor_value() const {
  switch (divisor) {
    case VarianceDivisor::NMinusP:
      return static_cast<double>(n() - p());
    case VarianceDivisor::NMinusOne:
      return static_cast<double>(n() - 1);
    case VarianceDivisor::N:
      return static_cast<double>(n());
  }
  return static_cast<double>(n());
}

RegressionProblem ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                          VarianceDivisor divisor) {
  if (X.rows() != Y.size()) throw PreconditionError("ols_fit: X and Y row counts differ");
  if (X.rows() < X.cols()) throw PreconditionError("ols_fit: fewer rows than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    std::ostringstream msg;
    msg << "ols_fit: design matrix has rank " << qr.rank() << " < " << X.cols();
    throw PreconditionError(msg.str());
  }
  RegressionProblem r;
  r.X = X;
  r.Y = Y;
  r.divisor = divisor;
  r.beta = qr.solve(Y);
  r.residuals = Y - X * r.beta;
  const double div = r.divisor_value();
  r.sigma2 = div > 0.0 ? r.residuals.squaredNorm() / div : std::numeric_limits<double>::quiet_NaN();
  const auto R = qr.matrixQR();
  for (Eigen::Index j = 0; j < X.cols(); ++j) r.log_det_xtx += 2.0 * std::log(std::fabs(R(j, j)));
  return r;
}

bool BootstrapStatistic::admissible() const noexcept {
  return p >= 1 && std::isfinite(theta) &&
         std::fabs(theta) < 0.5 * p * (1.0 - ThetaDomain::kBoundaryMargin);
}

std::pair<double, double> bootstrap_psi(double a, int n, int p, double theta) {
  if (n < 1 || p < 1) throw PreconditionError("bootstrap_psi needs n >= 1 and p >= 1");
  require_admissible(theta, p, "bootstrap_psi");
  const double u = 1.0 - 2.0 * theta / p;
  const double psi = -theta * a - 0.5 * n * std::log(u);
  const double dpsi = -a + (static_cast<double>(n) / p) / u;
  return {psi, dpsi};
}

double bootstrap_conditional_excess(double a, int n, int p, double theta) {
  require_admissible(theta, p, "bootstrap_conditional_excess");
  const double k = 0.5 * n;
  const double s = 2.0 / (p + 2.0 * theta);
  const double x = a / s;
  if (x <= 0.0) return k * s - a;
  const double q = numerics::gamma_q(k, x);
  if (q == 0.0) return s;
  return k * s + s * x * numerics::gamma_p_derivative(k, x) / q - a;
}

SolverResult solve_bootstrap_tilt(const BootstrapStatistic& stat, const SolverConfig& cfg) {
  const double mean = static_cast<double>(stat.n) / stat.p;
  if (!(stat.a > mean)) {
    std::ostringstream msg;
    msg << "solve_bootstrap_tilt: a = " << stat.a << " must exceed n/p = " << mean;
    throw PreconditionError(msg.str());
  }
  const double hi = 0.5 * stat.p * (1.0 - 2.0 * ThetaDomain::kBoundaryMargin);
  TiltEquation eq;
  eq.psi_prime = [&](double t) { return bootstrap_psi(stat.a, stat.n, stat.p, t).second; };
  eq.h = [&](double t) { return bootstrap_conditional_excess(stat.a, stat.n, stat.p, t); };
  eq.lo = 0.0;
  eq.hi = eq.hi_limit = hi;
  eq.initial = cfg.initial_theta.value_or(0.5 * stat.p * (1.0 - mean / stat.a));
  return solve_tilt_equation(eq, cfg);
}

const char* to_string(ResampleFamily family) noexcept {
  return family == ResampleFamily::Normal ? "normal" : "chi2";
}

EstimateReport resample_tilted(const RegressionProblem& problem, const BootstrapStatistic& stat,
                               ResampleFamily family, std::uint64_t B, std::uint64_t seed,
                               unsigned workers) {
  if (B < 1) throw PreconditionError("resample_tilted requires B >= 1");
  const TiltedStatistic draw(problem, stat, family);
  const auto acc = blocked_moments(B, seed, workers, [&](Rng& rng) { return draw.weight(rng); });
  EstimateReport r;
  r.p_hat = acc.mean;
  r.variance = acc.variance();
  r.n = acc.count;
  r.std_err = std::sqrt(r.variance / static_cast<double>(r.n));
  r.method = stat.theta == 0.0 ? Method::Naive : Method::ImportanceSampling;
  r.theta = stat.theta;
  r.seed = seed;
  r.family = to_string(family);
  r.threshold = stat.a;
  return r;
}

EstimateReport replicate_resample(const RegressionProblem& problem,
                                  const BootstrapStatistic& stat, ResampleFamily family,
                                  std::uint64_t B, std::uint64_t M, std::uint64_t seed,
                                  unsigned workers) {
  if (B < 1 || M < 2) throw PreconditionError("replicate_resample requires B >= 1 and M >= 2");
  const TiltedStatistic draw(problem, stat, family);
  const double inv_b = 1.0 / static_cast<double>(B);
  const auto values = replicated_values(M, seed, workers, [&](Rng& rng) {
    double sum = 0.0;
    for (std::uint64_t i = 0; i < B; ++i) sum += draw.weight(rng);
    return sum * inv_b;
  });
  EstimateReport r = summarize_replicates(
      values, B, stat.theta == 0.0 ? Method::Naive : Method::ImportanceSampling, stat.theta,
      seed);
  r.family = to_string(family);
  r.threshold = stat.a;
  return r;
}

CoverageReport coverage_experiment(const RegressionProblem& problem, double nominal,
                                   std::uint64_t B, std::uint64_t trials, std::uint64_t seed,
                                   bool importance, unsigned workers) {
  if (!(nominal > 0.0 && nominal < 1.0)) {
    throw PreconditionError("coverage_experiment: nominal must lie in (0, 1)");
  }
  if (trials < 2) throw PreconditionError("coverage_experiment: needs at least 2 trials");
  const double alpha = 1.0 - nominal;
  if (!importance && static_cast<double>(B) * alpha < 10.0) {
    std::ostringstream msg;
    msg << "coverage_experiment: B = " << B << " leaves " << static_cast<double>(B) * alpha
        << " naive draws beyond the " << nominal << " quantile; need at least 10";
    throw PreconditionError(msg.str());
  }

  const int n = static_cast<int>(problem.n());
  const int p = static_cast<int>(problem.p());
  const double div = problem.divisor_value();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(problem.X);
  const Eigen::MatrixXd xtx = problem.X.transpose() * problem.X;
  const Eigen::VectorXd fitted = problem.X * problem.beta;
  const double sigma = std::sqrt(problem.sigma2);
  const double log_ball = 0.5 * p * std::log(std::numbers::pi) - numerics::log_gamma(0.5 * p + 1.0) -
                          0.5 * problem.log_det_xtx;

  CoverageReport out;
  out.trials = trials;
  out.B = B;
  out.importance = importance;
  double log_norm = 0.0;
  if (importance) {
    const double a_p = boost::math::quantile(
        boost::math::complement(boost::math::chi_squared_distribution<double>(p), alpha));
    const auto chi = make_family(ChiSquareSpec{static_cast<double>(p)});
    out.theta = solve_optimal_tilt(*chi, TailEvent{a_p, Tail::Upper}).theta_star;
    log_norm = chi->psi(out.theta);
  }
  const double tilt_sd = 1.0 / std::sqrt(1.0 - 2.0 * out.theta);

  struct Trial {
    bool missed = false;
    double volume = 0.0;
    double t_crit = 0.0;
  };
  std::vector<Trial> results(static_cast<std::size_t>(trials));
  parallel_for(results.size(), workers, [&](std::size_t t) {
    Rng rng = Rng::stream(seed, t);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = fitted(i) + sigma * rng.normal();
    const Eigen::VectorXd beta = qr.solve(y);
    const double s2 = (y - problem.X * beta).squaredNorm() / div;
    const Eigen::VectorXd diff = beta - problem.beta;
    const double stat = diff.dot(xtx * diff) / (p * s2);

    // Studentised pivot: div |z1|^2 / (p |z2|^2) with z1 in R^p, z2 in R^(n-p).
    std::vector<double> ts(B);
    std::vector<double> ws(B);
    for (std::uint64_t b = 0; b < B; ++b) {
      double num = 0.0;
      for (int j = 0; j < p; ++j) {
        const double z = tilt_sd * rng.normal();
        num += z * z;
      }
      double den = 0.0;
      for (int j = p; j < n; ++j) {
        const double z = rng.normal();
        den += z * z;
      }
      ts[b] = div * num / (p * den);
      ws[b] = importance ? std::exp(-out.theta * num + log_norm) : 1.0;
    }
    std::vector<std::size_t> order(B);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return ts[i] > ts[j];
    });
    double mass = 0.0;
    std::size_t k = 0;
    for (; k < order.size(); ++k) {
      mass += ws[order[k]] / static_cast<double>(B);
      if (mass >= alpha) break;
    }
    if (k == order.size()) k = order.size() - 1;
    if (importance && k + 1 < 10) {
      throw NumericalError("coverage_experiment: fewer than 10 resamples beyond t_crit");
    }
    Trial& r = results[t];
    r.t_crit = ts[order[k]];
    r.missed = stat > r.t_crit;
    r.volume = std::exp(log_ball + 0.5 * p * std::log(p * s2 * r.t_crit));
  });

  MomentAccumulator volume;
  double misses = 0.0;
  double t_crit = 0.0;
  for (const Trial& r : results) {
    misses += r.missed ? 1.0 : 0.0;
    volume.push(r.volume);
    t_crit += r.t_crit;
  }
  out.non_coverage = misses / static_cast<double>(trials);
  out.mean_volume = volume.mean;
  out.sd_volume = std::sqrt(volume.sample_variance());
  out.mean_t_crit = t_crit / static_cast<double>(trials);
  return out;
}

}  // namespace tilt
