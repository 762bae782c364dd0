#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "tilt/estimator.hpp"
#include "tilt/solver.hpp"

namespace tilt {

struct RegressionData {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
};

/// The Longley employment data: 16 rows, an intercept column followed by
/// the six predictors, and total employment as the response.
RegressionData longley_data();

/// Divisor of the residual sum of squares in sigma2.
enum class VarianceDivisor { NMinusP, NMinusOne, N };

struct RegressionProblem {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  double sigma2 = 0.0;
  VarianceDivisor divisor = VarianceDivisor::NMinusOne;
  /// log det(X^T X), from the triangular factor of X.
  double log_det_xtx = 0.0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  double divisor_value() const;
};

/// Least squares through a column-pivoted Householder QR of X. Throws
/// PreconditionError if X does not have full column rank.
RegressionProblem ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                          VarianceDivisor divisor = VarianceDivisor::NMinusOne);

/// Tail event {T* > a} for T* = chi2_n / p, tilted by theta.
struct BootstrapStatistic {
  double a = 0.0;
  int n = 1;
  int p = 1;
  double theta = 0.0;

  /// |theta| < p / 2, so both Q_theta and its conjugate exist.
  bool admissible() const noexcept;
};

/// psi_a(theta) = -theta a - (n/2) log(1 - 2 theta / p) and its derivative
/// -a + (n/p) / (1 - 2 theta / p).
std::pair<double, double> bootstrap_psi(double a, int n, int p, double theta);

/// E_{Qbar_theta}[T* - a | T* > a]; T* is Gamma(n/2, 2 / (p + 2 theta)) under Qbar_theta.
double bootstrap_conditional_excess(double a, int n, int p, double theta);

/// Solves psi_a'(theta) = E_{Qbar_theta}[T* - a | T* > a] (stat.theta is ignored).
/// Throws PreconditionError unless a > n / p.
SolverResult solve_bootstrap_tilt(const BootstrapStatistic& stat, const SolverConfig& cfg = {});

enum class ResampleFamily { Normal, ChiSquare };

const char* to_string(ResampleFamily family) noexcept;

/// One run of B tilted resamples estimating P(T* > a). Normal: residuals
/// drawn from N(0, sigma2 / (1 - 2 theta / p)), T* = sum e_i^2 / (p sigma2).
/// ChiSquare: T* = sum X_i / p with X_i tilted chi2(1). Both are weighted by
/// exp(-theta (T* - a) + psi_a(theta)); stat.n is taken from the problem.
EstimateReport resample_tilted(const RegressionProblem& problem, const BootstrapStatistic& stat,
                               ResampleFamily family, std::uint64_t B, std::uint64_t seed,
                               unsigned workers = 0);

/// M independent resample_tilted runs of size B; variance is that of one run.
EstimateReport replicate_resample(const RegressionProblem& problem,
                                  const BootstrapStatistic& stat, ResampleFamily family,
                                  std::uint64_t B, std::uint64_t M, std::uint64_t seed,
                                  unsigned workers = 0);

struct CoverageReport {
  double non_coverage = 0.0;
  double mean_volume = 0.0;
  double sd_volume = 0.0;
  double mean_t_crit = 0.0;
  double theta = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t B = 0;
  bool importance = false;
};

/// Repeatedly simulates Y = X beta_hat + N(0, sigma2_hat) errors, refits,
/// calibrates t_crit as the upper (1 - nominal) bootstrap quantile of the
/// studentised statistic and checks whether beta_hat lies in
/// {beta : (b - beta)^T X^T X (b - beta) <= p s^2 t_crit}. With importance
/// resampling the chi2_p numerator is tilted at the optimal chi2_p tilt for
/// its own nominal quantile and t_crit is a weighted quantile.
/// Throws PreconditionError when naive resampling has B (1 - nominal) < 10,
/// and NumericalError when an importance run puts fewer than 10 draws past t_crit.
CoverageReport coverage_experiment(const RegressionProblem& problem, double nominal,
                                   std::uint64_t B, std::uint64_t trials, std::uint64_t seed,
                                   bool importance, unsigned workers = 0);

}  // namespace tilt
