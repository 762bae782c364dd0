#include "tilt/var_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "tilt/errors.hpp"
#include "tilt/numerics.hpp"
#include "tilt/parallel.hpp"

namespace tilt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMinHits = 50;

void require_correlation(const Eigen::MatrixXd& m, Eigen::Index d, const char* what) {
  std::ostringstream msg;
  msg << what;
  if (m.rows() != d || m.cols() != d) {
    msg << " must be " << d << "x" << d;
    throw PreconditionError(msg.str());
  }
  if (!m.isApprox(m.transpose(), 1e-12)) {
    msg << " must be symmetric";
    throw PreconditionError(msg.str());
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::fabs(m(i, i) - 1.0) > 1e-12) {
      msg << " must have unit diagonal";
      throw PreconditionError(msg.str());
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    msg << " must be positive definite";
    throw PreconditionError(msg.str());
  }
}

void require_length(const Eigen::VectorXd& v, Eigen::Index d, const char* what) {
  if (v.size() != d) {
    std::ostringstream msg;
    msg << what << " has length " << v.size() << ", expected " << d;
    throw PreconditionError(msg.str());
  }
}

}  // namespace

Eigen::MatrixXd JumpDiffusionSpec::jump_covariance() const {
  return delta.asDiagonal() * jump_corr * delta.asDiagonal();
}

void JumpDiffusionSpec::validate() const {
  const Eigen::Index d = dim();
  if (d < 1) throw PreconditionError("jump diffusion needs at least one factor");
  require_length(mu, d, "mu");
  require_length(eta, d, "eta");
  require_length(delta, d, "delta");
  if ((sigma.array() <= 0.0).any()) throw PreconditionError("sigma must be positive");
  if ((delta.array() <= 0.0).any()) throw PreconditionError("delta must be positive");
  if (!(jump_intensity >= 0.0)) throw PreconditionError("jump intensity must be >= 0");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  require_correlation(corr, d, "corr");
  require_correlation(jump_corr, d, "jump_corr");
}

Diagonalization diagonalize(const Eigen::MatrixXd& corr, const Eigen::MatrixXd& A1) {
  if (corr.rows() != corr.cols() || A1.rows() != corr.rows() || A1.cols() != corr.cols()) {
    throw PreconditionError("diagonalize: corr and A1 must be square of the same size");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("diagonalize: Cholesky failed, corr is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd inner = L.transpose() * (0.5 * (A1 + A1.transpose())) * L;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner);
  if (eig.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");

  const Eigen::Index d = corr.rows();
  Diagonalization out;
  out.lambdas.resize(d);
  Eigen::MatrixXd U(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.lambdas(j) = eig.eigenvalues()(d - 1 - j);
    U.col(j) = eig.eigenvectors().col(d - 1 - j);
  }
  out.C = L * U;
  return out;
}

QuadraticPortfolio QuadraticPortfolio::from_greeks(const JumpDiffusionSpec& spec, double a0,
                                                   const Eigen::VectorXd& a1,
                                                   const Eigen::MatrixXd& A1) {
  spec.validate();
  const Eigen::Index d = spec.dim();
  require_length(a1, d, "a1");
  if (A1.rows() != d || A1.cols() != d) throw PreconditionError("A1 has the wrong shape");

  QuadraticPortfolio p;
  p.a0 = a0;
  p.a1 = a1;
  p.A1 = A1;
  const Eigen::VectorXd drift = spec.mu * spec.dt;
  p.b0 = a0 + a1.dot(drift) + drift.dot(A1 * drift);
  const Diagonalization diag = diagonalize(spec.corr, A1);
  p.C = diag.C;
  p.lambdas = diag.lambdas;
  const Eigen::VectorXd scale = spec.sigma * std::sqrt(spec.dt);
  p.b = (a1.transpose() * scale.asDiagonal() * p.C).transpose();
  return p;
}

QuadraticPortfolio QuadraticPortfolio::from_diagonal(const Eigen::VectorXd& b,
                                                     const Eigen::VectorXd& lambdas,
                                                     const Eigen::VectorXd& a1) {
  require_length(lambdas, b.size(), "lambdas");
  require_length(a1, b.size(), "a1");
  QuadraticPortfolio p;
  p.a1 = a1;
  p.b = b;
  p.lambdas = lambdas;
  return p;
}

LossModel::LossModel(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec) {
  spec.validate();
  const Eigen::Index d = spec.dim();
  require_length(portfolio.b, d, "b");
  require_length(portfolio.lambdas, d, "lambdas");
  require_length(portfolio.a1, d, "a1");

  b_ = portfolio.b;
  c_ = portfolio.lambdas.cwiseProduct(spec.sigma.cwiseAbs2()) * spec.dt;
  a1_ = portfolio.a1;
  eta_ = spec.eta;
  const Eigen::MatrixXd omega = spec.jump_covariance();
  omega_a1_ = omega * a1_;
  omega_chol_ = Eigen::LLT<Eigen::MatrixXd>(omega).matrixL();
  rate_ = spec.jump_intensity * spec.dt;
  jump_mean_ = a1_.dot(eta_);
  jump_var_ = a1_.dot(omega_a1_);
  const double c_max = c_.cwiseAbs().maxCoeff();
  strip_ = c_max > 0.0 ? 0.5 / c_max : kInf;
}

bool LossModel::admissible(double theta) const {
  return std::isfinite(theta) &&
         std::fabs(theta) <= strip_ * (1.0 - ThetaDomain::kBoundaryMargin);
}

void LossModel::require_admissible(double theta) const {
  if (admissible(theta)) return;
  std::ostringstream msg;
  msg << "theta = " << theta << " is outside the admissibility strip |theta| < " << strip_;
  for (Eigen::Index j = 0; j < c_.size(); ++j) {
    if (1.0 - 2.0 * std::fabs(theta * c_(j)) <= 0.0) {
      msg << ": 1 - 2 |theta| c_" << j + 1 << " <= 0 (c_" << j + 1 << " = " << c_(j) << ")";
      break;
    }
  }
  throw DomainError(msg.str());
}

double LossModel::psi(double theta, double r_p) const {
  require_admissible(theta);
  double total = 0.0;
  for (Eigen::Index j = 0; j < c_.size(); ++j) {
    const double u = 1.0 - 2.0 * theta * c_(j);
    total += 0.5 * (theta * b_(j)) * (theta * b_(j)) / u - 0.5 * std::log(u);
  }
  total += rate_ * std::expm1(theta * jump_mean_ + 0.5 * theta * theta * jump_var_);
  return total - theta * r_p;
}

double LossModel::psi_prime(double theta, double r_p) const {
  require_admissible(theta);
  double total = 0.0;
  for (Eigen::Index j = 0; j < c_.size(); ++j) {
    const double u = 1.0 - 2.0 * theta * c_(j);
    total += theta * b_(j) * b_(j) * (1.0 - theta * c_(j)) / (u * u) + c_(j) / u;
  }
  const double m = jump_mean_ + theta * jump_var_;
  total += rate_ * std::exp(theta * jump_mean_ + 0.5 * theta * theta * jump_var_) * m;
  return total - r_p;
}

double LossModel::psi_double_prime(double theta, double) const {
  require_admissible(theta);
  double total = 0.0;
  for (Eigen::Index j = 0; j < c_.size(); ++j) {
    const double u = 1.0 - 2.0 * theta * c_(j);
    total += b_(j) * b_(j) / (u * u * u) + 2.0 * c_(j) * c_(j) / (u * u);
  }
  const double m = jump_mean_ + theta * jump_var_;
  total += rate_ * std::exp(theta * jump_mean_ + 0.5 * theta * theta * jump_var_) *
           (m * m + jump_var_);
  return total;
}

TiltedJDParams LossModel::tilted(double theta) const {
  require_admissible(theta);
  TiltedJDParams p;
  const Eigen::ArrayXd u = 1.0 - 2.0 * theta * c_.array();
  p.mean = (theta * b_.array() / u).matrix();
  p.variance = u.inverse().matrix();
  p.intensity = rate_ * std::exp(theta * jump_mean_ + 0.5 * theta * theta * jump_var_);
  p.jump_mean = eta_ + theta * omega_a1_;
  return p;
}

double LossModel::sample(const TiltedJDParams& params, Rng& rng) const {
  double loss = 0.0;
  for (Eigen::Index j = 0; j < b_.size(); ++j) {
    const double z = params.mean(j) + std::sqrt(params.variance(j)) * rng.normal();
    loss += (b_(j) + c_(j) * z) * z;
  }
  if (params.intensity > 0.0) {
    if (!(params.intensity <= 1e6)) {
      throw NumericalError("loss sampler: tilted jump intensity is too large to simulate");
    }
    const auto jumps = std::poisson_distribution<int>(params.intensity)(rng);
    const Eigen::Index d = b_.size();
    Eigen::VectorXd xi(d);
    for (int i = 0; i < jumps; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) xi(j) = rng.normal();
      loss += a1_.dot(params.jump_mean + omega_chol_ * xi);
    }
  }
  return loss;
}

double psi_loss(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                double theta, double r_p) {
  return LossModel(portfolio, spec).psi(theta, r_p);
}

double psi_loss_prime(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                      double theta, double r_p) {
  return LossModel(portfolio, spec).psi_prime(theta, r_p);
}

double loss_sample(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                   const TiltedJDParams& params, Rng& rng) {
  return LossModel(portfolio, spec).sample(params, rng);
}

VarTiltResult solve_theta_p(const LossModel& model, double r_p, const SolverConfig& cfg,
                            std::uint64_t m, std::uint64_t seed) {
  cfg.validate();
  if (model.psi_prime(0.0, r_p) >= 0.0) {
    std::ostringstream msg;
    msg << "solve_theta_p: r_p = " << r_p << " does not exceed the mean loss "
        << model.psi_prime(0.0, 0.0);
    throw PreconditionError(msg.str());
  }
  const double hi_max = std::isfinite(model.strip())
                            ? model.strip() * (1.0 - ThetaDomain::kBoundaryMargin)
                            : 1e6;
  const auto psi_prime = [&](double t) { return model.psi_prime(t, r_p); };

  VarTiltResult out;
  double hi = std::isfinite(model.strip()) ? hi_max : 1.0;
  while (!(psi_prime(hi) > 0.0)) {
    if (hi >= hi_max) throw DomainError("solve_theta_p: r_p is beyond the range of psi'");
    hi = std::min(2.0 * hi, hi_max);
  }
  out.theta_reference = numerics::bisect_root(psi_prime, 0.0, hi, 1e-14);

  // Reference draws from Q_{theta_ref}; only the excesses over r_p matter.
  const TiltedJDParams ref = model.tilted(out.theta_reference);
  const std::size_t blocks = static_cast<std::size_t>((m + kBlockSize - 1) / kBlockSize);
  std::vector<std::vector<double>> per_block(blocks);
  parallel_for(blocks, 0, [&](std::size_t blk) {
    Rng rng = Rng::stream(seed, blk);
    const std::uint64_t begin = static_cast<std::uint64_t>(blk) * kBlockSize;
    const std::uint64_t end = std::min<std::uint64_t>(m, begin + kBlockSize);
    for (std::uint64_t i = begin; i < end; ++i) {
      const double y = model.sample(ref, rng) - r_p;
      if (y > 0.0) per_block[blk].push_back(y);
    }
  });
  std::vector<double> excess;
  for (const auto& v : per_block) excess.insert(excess.end(), v.begin(), v.end());
  out.hits = excess.size();
  if (out.hits < kMinHits) {
    std::ostringstream msg;
    msg << "solve_theta_p: only " << out.hits << " of " << m
        << " reference draws exceed r_p = " << r_p << "; increase m";
    throw PreconditionError(msg.str());
  }
  const double y_min = *std::min_element(excess.begin(), excess.end());

  // E_{Qbar_theta}[Y | Y > 0] as a self-normalised reweighting of the
  // reference excesses; dQbar_theta / dQ_ref is proportional to exp(-(theta + theta_ref) Y).
  const auto h = [&](double t) {
    const double s = t + out.theta_reference;
    double sw = 0.0;
    double swy = 0.0;
    for (double y : excess) {
      const double w = std::exp(-s * (y - y_min));
      sw += w;
      swy += w * y;
    }
    return swy / sw;
  };

  TiltEquation eq;
  eq.psi_prime = psi_prime;
  eq.h = h;
  eq.lo = 0.0;
  eq.hi = hi;
  eq.hi_limit = hi_max;
  eq.initial = cfg.initial_theta.value_or(out.theta_reference);
  out.solve = solve_tilt_equation(eq, cfg);
  if (!out.solve.ok()) return out;

  const double theta = out.solve.theta_star;
  const double mean = h(theta);
  const double s = theta + out.theta_reference;
  double sw = 0.0;
  double sw2d2 = 0.0;
  for (double y : excess) {
    const double w = std::exp(-s * (y - y_min));
    sw += w;
    sw2d2 += w * w * (y - mean) * (y - mean);
  }
  out.conditional_mean_se = std::sqrt(sw2d2) / sw;
  const double step = 1e-5 * std::max(theta, 1e-3);
  const double lo_t = std::max(0.0, theta - step);
  const double hi_t = std::min(hi_max, theta + step);
  out.equation_slope =
      ((psi_prime(hi_t) - h(hi_t)) - (psi_prime(lo_t) - h(lo_t))) / (hi_t - lo_t);
  return out;
}

SolverResult solve_theta_p(const QuadraticPortfolio& portfolio, const JumpDiffusionSpec& spec,
                           double r_p, const SolverConfig& cfg, std::uint64_t m,
                           std::uint64_t seed) {
  return solve_theta_p(LossModel(portfolio, spec), r_p, cfg, m, seed).solve;
}

EstimateReport estimate_var_tail(const LossModel& model, double theta_p, double r_p,
                                 std::uint64_t k, std::uint64_t M, std::uint64_t seed,
                                 unsigned workers) {
  if (k < 1 || M < 2) throw PreconditionError("estimate_var_tail requires k >= 1 and M >= 2");
  const TiltedJDParams params = model.tilted(theta_p);
  const double log_norm = model.psi(theta_p, r_p);
  const double inv_k = 1.0 / static_cast<double>(k);
  const auto values = replicated_values(M, seed, workers, [&](Rng& rng) {
    double sum = 0.0;
    for (std::uint64_t i = 0; i < k; ++i) {
      const double y = model.sample(params, rng) - r_p;
      if (y > 0.0) sum += theta_p == 0.0 ? 1.0 : std::exp(-theta_p * y + log_norm);
    }
    return sum * inv_k;
  });
  EstimateReport r = summarize_replicates(
      values, k, theta_p == 0.0 ? Method::Naive : Method::ImportanceSampling, theta_p, seed);
  r.family = "jump-diffusion";
  r.threshold = r_p;
  return r;
}

EstimateReport estimate_var_tail(const QuadraticPortfolio& portfolio,
                                 const JumpDiffusionSpec& spec, double theta_p, double r_p,
                                 std::uint64_t k, std::uint64_t M, std::uint64_t seed,
                                 unsigned workers) {
  return estimate_var_tail(LossModel(portfolio, spec), theta_p, r_p, k, M, seed, workers);
}

VarQuantileResult find_var_quantile(const LossModel& model, double p, const SolverConfig& cfg,
                                    const QuantileBudget& budget) {
  if (!(p > 0.0 && p < 0.5)) throw PreconditionError("find_var_quantile requires 0 < p < 0.5");
  const double mean = model.psi_prime(0.0, 0.0);
  const double sd = std::sqrt(model.psi_double_prime(0.0, 0.0));

  VarQuantileResult out;
  const auto evaluate = [&](double r) {
    double theta = 0.0;
    if (r > mean) {
      try {
        theta = solve_theta_p(model, r, cfg, budget.m, budget.seed).solve.theta_star;
      } catch (const PreconditionError&) {
        theta = 0.0;
      }
      if (!std::isfinite(theta)) theta = 0.0;
    }
    ++out.steps;
    return estimate_var_tail(model, theta, r, budget.k, budget.M, budget.seed,
                             budget.workers);
  };
  const auto accept = [&](double r, const EstimateReport& e) {
    out.r_p = r;
    out.p_hat = e.p_hat;
    out.std_err = e.std_err;
    return std::fabs(e.p_hat - p) <= 2.0 * e.std_err;
  };

  double lo = mean;
  double hi = mean + sd * numerics::normal_isf(p);
  EstimateReport at_lo = evaluate(lo);
  while (at_lo.p_hat < p && out.steps < budget.max_steps) {
    lo -= sd;
    at_lo = evaluate(lo);
  }
  EstimateReport at_hi = evaluate(hi);
  while (at_hi.p_hat > p && out.steps < budget.max_steps) {
    lo = hi;
    hi += sd;
    at_hi = evaluate(hi);
  }
  if (accept(hi, at_hi)) {
    out.converged = true;
  } else {
    while (out.steps < budget.max_steps) {
      const double mid = 0.5 * (lo + hi);
      const EstimateReport e = evaluate(mid);
      if (accept(mid, e)) {
        out.converged = true;
        break;
      }
      (e.p_hat > p ? lo : hi) = mid;
    }
    if (!out.converged) out.r_p = 0.5 * (lo + hi);
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  return out;
}

}  // namespace tilt
