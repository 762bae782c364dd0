#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "tilt/estimator.hpp"
#include "tilt/rng.hpp"
#include "tilt/solver.hpp"

namespace tilt {

/// d-dimensional jump diffusion over one step of length dt. Returns are
/// mu dt + sigma sqrt(dt) X + J with X ~ N(0, corr) and J a compound Poisson
/// sum of N(eta, diag(delta) jump_corr diag(delta)) jump vectors.
struct JumpDiffusionSpec {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd corr;
  double jump_intensity = 0.0;
  Eigen::VectorXd eta;
  Eigen::VectorXd delta;
  Eigen::MatrixXd jump_corr;
  double dt = 1.0;

  Eigen::Index dim() const { return sigma.size(); }
  /// Jump covariance diag(delta) jump_corr diag(delta).
  Eigen::MatrixXd jump_covariance() const;
  /// Throws PreconditionError on shape mismatches, non-positive scales, or
  /// correlation matrices that are not symmetric positive definite with unit diagonal.
  void validate() const;
};

struct Diagonalization {
  /// C C^T = corr and C^T A1 C = diag(lambdas).
  Eigen::MatrixXd C;
  /// Eigenvalues in decreasing order.
  Eigen::VectorXd lambdas;
};

/// corr = L L^T (Cholesky), then L^T A1 L = U diag(lambdas) U^T and C = L U.
/// Throws NumericalError if corr is not positive definite.
Diagonalization diagonalize(const Eigen::MatrixXd& corr, const Eigen::MatrixXd& A1);

/// Delta-gamma loss L = a0 + a1^T r + r^T A1 r in diagonal form:
/// L - b0 = sum_j b_j Z_j + lambda_j sigma_j^2 dt Z_j^2 + a1^T J with Z ~ N(0, I).
struct QuadraticPortfolio {
  double a0 = 0.0;
  Eigen::VectorXd a1;
  Eigen::MatrixXd A1;
  double b0 = 0.0;
  Eigen::VectorXd b;
  Eigen::VectorXd lambdas;
  /// Empty when the portfolio was given directly in diagonal form.
  Eigen::MatrixXd C;

  static QuadraticPortfolio from_greeks(const JumpDiffusionSpec& spec, double a0,
                                        const Eigen::VectorXd& a1, const Eigen::MatrixXd& A1);
  /// b and lambdas given directly; a1 still loads the jump vector.
  static QuadraticPortfolio from_diagonal(const Eigen::VectorXd& b,
                                          const Eigen::VectorXd& lambdas,
                                          const Eigen::VectorXd& a1);
};

/// Component laws of the loss under Q_theta.
struct TiltedJDParams {
  Eigen::VectorXd mean;      // mu_j(theta)
  Eigen::VectorXd variance;  // sigma_j^2(theta)
  double intensity = 0.0;    // lambda(theta), jumps per step
  Eigen::VectorXd jump_mean; // eta(theta)
};

/// Everything the sampler and the cumulant generating function need,
/// precomputed once. Immutable.
class LossModel {
 public:
  LossModel(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec);

  Eigen::Index dim() const { return b_.size(); }
  /// Half-width of the strip |theta| < 1 / (2 max_j |c_j|), c_j = lambda_j sigma_j^2 dt.
  double strip() const { return strip_; }
  bool admissible(double theta) const;
  /// Throws DomainError naming the first component with 1 -+ 2 theta c_j <= 0.
  void require_admissible(double theta) const;

  /// Cumulant generating function of L_b - r_p and its derivatives.
  double psi(double theta, double r_p) const;
  double psi_prime(double theta, double r_p) const;
  double psi_double_prime(double theta, double r_p) const;

  TiltedJDParams tilted(double theta) const;
  /// One draw of L_b under the given component laws. Throws NumericalError
  /// when the jump intensity exceeds 1e6 per step.
  double sample(const TiltedJDParams& params, Rng& rng) const;

  const Eigen::VectorXd& quadratic_coefficients() const { return c_; }
  double jump_rate() const { return rate_; }
  double jump_loading_mean() const { return jump_mean_; }
  double jump_loading_variance() const { return jump_var_; }

 private:
  Eigen::VectorXd b_;
  Eigen::VectorXd c_;
  Eigen::VectorXd a1_;
  Eigen::VectorXd eta_;
  Eigen::VectorXd omega_a1_;
  Eigen::MatrixXd omega_chol_;
  double rate_ = 0.0;
  double jump_mean_ = 0.0;
  double jump_var_ = 0.0;
  double strip_ = 0.0;
};

double psi_loss(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                double theta, double r_p);
double psi_loss_prime(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                      double theta, double r_p);
double loss_sample(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                   const TiltedJDParams& params, Rng& rng);

struct VarTiltResult {
  SolverResult solve;
  /// Tilt of the reference sample (psi'(theta_ref) = 0 for L_b - r_p).
  double theta_reference = 0.0;
  std::uint64_t hits = 0;
  /// Standard error of the conditional-mean estimate at theta_star.
  double conditional_mean_se = 0.0;
  /// d/dtheta of psi' - h at theta_star.
  double equation_slope = 0.0;
};

/// Solves psi'(theta) = E_{Qbar_theta}[L_b - r_p | L_b > r_p]. The conditional
/// mean comes from m draws of one reference tilt (fixed seed, so the map is
/// deterministic) reweighted to each Qbar_theta. Throws PreconditionError
/// when fewer than 50 reference draws exceed r_p.
VarTiltResult solve_theta_p(const LossModel& model, double r_p, const SolverConfig& cfg,
                            std::uint64_t m, std::uint64_t seed);
SolverResult solve_theta_p(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                           double r_p, const SolverConfig& cfg, std::uint64_t m,
                           std::uint64_t seed);

/// M replications of the k-sample estimator of P(L_b > r_p) at tilt theta_p
/// (theta_p = 0 is the naive estimator).
EstimateReport estimate_var_tail(const LossModel& model, double theta_p, double r_p,
                                 std::uint64_t k, std::uint64_t M, std::uint64_t seed,
                                 unsigned workers = 0);
EstimateReport estimate_var_tail(const QuadraticPortfolio& portfolio,
                                 const JumpDiffusionSpec& spec, double theta_p, double r_p,
                                 std::uint64_t k, std::uint64_t M, std::uint64_t seed,
                                 unsigned workers = 0);

struct QuantileBudget {
  std::uint64_t k = 1000;
  std::uint64_t M = 200;
  std::uint64_t m = 50000;
  int max_steps = 40;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct VarQuantileResult {
  double r_p = 0.0;
  double p_hat = 0.0;
  double std_err = 0.0;
  /// False when the step budget ran out before the estimate reached p.
  bool converged = false;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int steps = 0;
};

/// Bisection on r of the importance-sampled P(L_b > r), re-solving theta_p
/// at every candidate, until the estimate is within two standard errors of p.
VarQuantileResult find_var_quantile(const LossModel& model, double p, const SolverConfig& cfg,
                                    const QuantileBudget& budget = {});

}  // namespace tilt
