#include "tilt_cli/commands.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tilt/errors.hpp"
#include "tilt/estimator.hpp"
#include "tilt/families.hpp"
#include "tilt/solver.hpp"

namespace tilt::cli {

namespace {

SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig s;
  s.tol_rel = cfg.solver.tol;
  s.max_iter = cfg.solver.max_iter;
  s.initial_theta = cfg.solver.initial;
  return s;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd equicorrelation(Eigen::Index d, double rho) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(d, d, rho);
  m.diagonal().setOnes();
  return m;
}

Tail tail_of(const std::string& name) { return name == "lower" ? Tail::Lower : Tail::Upper; }

double optimal_theta(const TiltingFamily& family, const TailEvent& ev, const SolverConfig& s) {
  const auto r = solve_optimal_tilt(family, ev, s);
  if (!r.ok()) {
    throw DomainError("no admissible optimal tilt for " + family.name() + " at threshold " +
                      general(ev.threshold));
  }
  return r.theta_star;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) { return derive_stream(seed, k); }

Table solve(const RunConfig& cfg) {
  const auto family = build_family(cfg.family);
  const TailEvent ev{*cfg.event.a, tail_of(cfg.event.tail)};
  const auto r = solve_optimal_tilt(*family, ev, solver_config(cfg));
  Table t{{"family", "a", "tail", "theta_star", "status", "iterations"}, {}};
  t.add_row({family->name(), general(ev.threshold), cfg.event.tail, fixed(r.theta_star, 6),
             to_string(r.status), std::to_string(r.iterations)});
  return t;
}

Table estimate(const RunConfig& cfg) {
  const auto family = build_family(cfg.family);
  const auto& s = cfg.sampling;
  const double a = *cfg.event.a;
  Table t{{"method", "family", "a", "theta", "n", "seed", "p_hat", "std_err", "re", "re_star"}, {}};
  auto row = [&](const std::string& method, const EstimateReport& r, const std::string& re,
                 const std::string& re_star) {
    t.add_row({method, family->name(), general(r.threshold), fixed(r.theta, 6),
               std::to_string(r.n), std::to_string(r.seed), general(r.p_hat),
               general(r.std_err, 4), re, re_star});
  };

  if (s.method == "two-sided") {
    const double lower = cfg.event.lower.value_or(-a);
    const auto r = estimate_two_sided(*family, lower, a, s.n, cfg.seed, solver_config(cfg),
                                      s.workers);
    for (std::size_t i = 0; i < r.strata.size(); ++i) {
      row(i == 0 ? "two-sided:upper" : "two-sided:lower", r.strata[i], "", "");
    }
    row("two-sided", r, "", "");
    return t;
  }

  const TailEvent ev{a, tail_of(cfg.event.tail)};
  std::optional<EstimateReport> naive;
  if (s.method == "naive" || s.method == "both") {
    naive = estimate_naive(*family, ev, s.n, cfg.seed, s.workers);
    naive->threshold = a;
    row("naive", *naive, "", "");
  }
  if (s.method == "is" || s.method == "both") {
    const double theta = optimal_theta(*family, ev, solver_config(cfg));
    auto is = estimate_is(*family, theta, ev, s.n, cfg.seed + 1, s.workers);
    is.threshold = a;
    const double re_star = analytic_re_star(*family, theta, ev);
    std::string re;
    if (naive && naive->variance > 0.0 && is.variance > 0.0) {
      re = fixed(relative_efficiency(*naive, is).re_empirical, 2);
    }
    row("is", is, re, fixed(re_star, 2));
  }
  return t;
}

struct Table2Family {
  const char* label;
  FamilySpec spec;
};

Table table2(const RunConfig& cfg) {
  namespace bm = boost::math;
  const Table2Family families[] = {
      {"N(0,1)", NormalSpec{1.0}},
      {"E(1)", ExponentialSpec{}},
      {"chi2(1)", ChiSquareSpec{1.0}},
      {"Gamma(4,10)", GammaSpec{4.0, 10.0}},
      {"NCchi2(2,10)", NoncentralChiSquareSpec{2.0, 10.0}},
  };
  auto quantile = [&](std::size_t i, double p) {
    switch (i) {
      case 0: return bm::quantile(bm::complement(bm::normal_distribution<>(), p));
      case 1: return -std::log(p);
      case 2: return bm::quantile(bm::complement(bm::chi_squared(1.0), p));
      case 3: return bm::quantile(bm::complement(bm::gamma_distribution<>(4.0, 10.0), p));
      default: return bm::quantile(bm::complement(bm::non_central_chi_squared(2.0, 10.0), p));
    }
  };
  const auto& s = cfg.sampling;
  Table t{{"family", "p", "a", "theta_star", "naive_p_hat", "naive_var", "is_p_hat", "is_var",
           "re", "re_star"},
          {}};
  std::uint64_t cell = 0;
  for (std::size_t i = 0; i < std::size(families); ++i) {
    const auto family = make_family(families[i].spec);
    for (double p : cfg.event.p) {
      const TailEvent ev{quantile(i, p), Tail::Upper};
      const double theta = optimal_theta(*family, ev, solver_config(cfg));
      const auto naive = estimate_naive(*family, ev, s.n, sub_seed(cfg.seed, 2 * cell), s.workers);
      const auto is =
          estimate_is(*family, theta, ev, s.n, sub_seed(cfg.seed, 2 * cell + 1), s.workers);
      ++cell;
      const std::string re =
          naive.variance > 0.0 ? fixed(naive.variance / is.variance, 2) : std::string("nan");
      t.add_row({families[i].label, general(p), fixed(ev.threshold, 4), fixed(theta, 4),
                 general(naive.p_hat), general(naive.variance, 4), general(is.p_hat),
                 general(is.variance, 4), re, fixed(analytic_re_star(*family, theta, ev), 2)});
    }
  }
  return t;
}

Table table3(const RunConfig& cfg) {
  namespace bm = boost::math;
  const auto family = build_family(cfg.family);
  const bm::non_central_chi_squared law(cfg.family.kappa, cfg.family.lambda);
  const auto& s = cfg.sampling;
  Table t{{"p", "a", "theta_star", "mc_mean", "mc_se", "is_mean", "is_se", "re", "re_star"}, {}};
  std::uint64_t cell = 0;
  for (double p : cfg.event.p) {
    const TailEvent ev{bm::quantile(bm::complement(law, p)), Tail::Upper};
    const double theta = optimal_theta(*family, ev, solver_config(cfg));
    const auto mc = estimate_naive(*family, ev, s.n, sub_seed(cfg.seed, 2 * cell), s.workers);
    const auto is =
        estimate_is(*family, theta, ev, s.n, sub_seed(cfg.seed, 2 * cell + 1), s.workers);
    ++cell;
    const double re = mc.variance > 0.0 ? mc.variance / is.variance : 0.0;
    t.add_row({general(p), fixed(ev.threshold, 2), fixed(theta, 4), fixed(mc.p_hat, 6),
               fixed(mc.std_err, 6), fixed(is.p_hat, 6), fixed(is.std_err, 6), fixed(re, 2),
               fixed(analytic_re_star(*family, theta, ev), 2)});
  }
  return t;
}

Table var(const RunConfig& cfg) {
  const LossModel model(build_portfolio(cfg.portfolio), build_model(cfg.portfolio));
  const auto& s = cfg.sampling;
  Table t{{"r_p", "theta_p", "naive_mean", "naive_var", "is_mean", "is_var", "re"}, {}};
  std::uint64_t cell = 0;
  for (double r_p : cfg.event.r_p) {
    const auto tilt = solve_theta_p(model, r_p, solver_config(cfg), s.m, sub_seed(cfg.seed, 3 * cell));
    if (!tilt.solve.ok()) throw DomainError("no admissible tilt at r_p = " + general(r_p));
    const double theta = tilt.solve.theta_star;
    const auto naive =
        estimate_var_tail(model, 0.0, r_p, s.k, s.M, sub_seed(cfg.seed, 3 * cell + 1), s.workers);
    const auto is =
        estimate_var_tail(model, theta, r_p, s.k, s.M, sub_seed(cfg.seed, 3 * cell + 2), s.workers);
    ++cell;
    const std::string re =
        is.variance > 0.0 ? fixed(naive.variance / is.variance, 2) : std::string("inf");
    t.add_row({general(r_p), fixed(theta, 4), general(naive.p_hat, 4), general(naive.variance, 3),
               general(is.p_hat, 4), general(is.variance, 3), re});
  }
  return t;
}

Table var_quantile(const RunConfig& cfg) {
  const LossModel model(build_portfolio(cfg.portfolio), build_model(cfg.portfolio));
  const auto& s = cfg.sampling;
  Table t{{"p", "r_p", "p_hat", "std_err", "converged", "steps"}, {}};
  std::uint64_t cell = 0;
  for (double p : cfg.event.p) {
    QuantileBudget budget;
    budget.k = s.k;
    budget.M = s.M;
    budget.m = s.m;
    budget.max_steps = cfg.portfolio.max_steps;
    budget.seed = sub_seed(cfg.seed, cell++);
    budget.workers = s.workers;
    const auto r = find_var_quantile(model, p, solver_config(cfg), budget);
    t.add_row({general(p), fixed(r.r_p, 4), general(r.p_hat, 4), general(r.std_err, 3),
               r.converged ? "true" : "false", std::to_string(r.steps)});
  }
  return t;
}

Table bootstrap(const RunConfig& cfg) {
  namespace bm = boost::math;
  const auto problem = build_regression(cfg.regression);
  const int n = static_cast<int>(problem.n());
  const int p = cfg.regression.p > 0 ? cfg.regression.p : static_cast<int>(problem.p());
  const auto family =
      cfg.regression.family == "normal" ? ResampleFamily::Normal : ResampleFamily::ChiSquare;
  const auto chi = make_family(ChiSquareSpec{static_cast<double>(n)});
  const auto& s = cfg.sampling;
  Table t{{"a", "alpha", "theta", "naive_mean", "naive_var", "is_mean", "is_var", "re", "re_star"},
          {}};
  std::uint64_t cell = 0;
  for (double alpha : cfg.event.p) {
    const double a = bm::quantile(bm::complement(bm::chi_squared(n), alpha)) / p;
    const auto tilt = solve_bootstrap_tilt({a, n, p, 0.0}, solver_config(cfg));
    const double theta = tilt.theta_star;
    const auto naive = replicate_resample(problem, {a, n, p, 0.0}, family, s.B, s.M,
                                          sub_seed(cfg.seed, 2 * cell), s.workers);
    const auto is = replicate_resample(problem, {a, n, p, theta}, family, s.B, s.M,
                                       sub_seed(cfg.seed, 2 * cell + 1), s.workers);
    ++cell;
    const std::string re =
        is.variance > 0.0 ? fixed(naive.variance / is.variance, 2) : std::string("inf");
    const double re_star = analytic_re_star(*chi, theta / p, {p * a, Tail::Upper});
    t.add_row({fixed(a, 3), general(alpha, 4), fixed(theta, 4), general(naive.p_hat, 4),
               general(naive.variance, 3), general(is.p_hat, 4), general(is.variance, 3), re,
               fixed(re_star, 2)});
  }
  return t;
}

Table coverage(const RunConfig& cfg) {
  const auto problem = build_regression(cfg.regression);
  const auto& r = cfg.regression;
  Table t{{"method", "B", "trials", "nominal", "non_coverage", "mean_area", "sd_area",
           "mean_t_crit", "theta"},
          {}};
  std::uint64_t cell = 0;
  for (const auto& d : r.designs) {
    const auto c = coverage_experiment(problem, r.nominal, d.B, r.trials, sub_seed(cfg.seed, cell++),
                                       d.importance, cfg.sampling.workers);
    t.add_row({d.importance ? "importance" : "naive", std::to_string(d.B),
               std::to_string(c.trials), general(r.nominal), fixed(c.non_coverage, 3),
               general(c.mean_volume), general(c.sd_volume), fixed(c.mean_t_crit, 4),
               fixed(c.theta, 4)});
  }
  return t;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read dataset " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw PreconditionError("non-numeric row in dataset " + path + ": " + line);
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw PreconditionError("ragged row in dataset " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2) {
    throw PreconditionError("dataset " + path + " needs a predictor and a response column");
  }
  return rows;
}

}  // namespace

FamilyPtr build_family(const FamilyConfig& c) {
  if (c.name == "normal") return make_family(NormalSpec{c.sigma});
  if (c.name == "exp1") return make_family(ExponentialSpec{});
  if (c.name == "chi2") return make_family(ChiSquareSpec{c.kappa});
  if (c.name == "gamma") return make_family(GammaSpec{c.alpha, c.beta});
  if (c.name == "ncchi2") return make_family(NoncentralChiSquareSpec{c.kappa, c.lambda});
  if (c.name == "binomial") return make_family(BinomialSpec{c.size, c.prob});
  if (c.name == "poisson") return make_family(PoissonSpec{c.lambda});
  if (c.name == "uniform") return make_family(UniformSpec{});
  if (c.name == "compound-poisson") {
    return make_compound_poisson({c.lambda, c.horizon, c.eta, c.delta2, c.offset});
  }
  throw PreconditionError("unknown family " + c.name);
}

JumpDiffusionSpec build_model(const PortfolioConfig& c) {
  const auto d = static_cast<Eigen::Index>(c.b.size());
  JumpDiffusionSpec s;
  s.mu = c.mu.empty() ? Eigen::VectorXd::Zero(d) : to_eigen(c.mu);
  s.sigma = to_eigen(c.sigma);
  s.delta = to_eigen(c.delta);
  s.eta = c.eta.empty() ? Eigen::VectorXd::Zero(d) : to_eigen(c.eta);
  s.corr = equicorrelation(d, c.rho);
  s.jump_corr = equicorrelation(d, c.jump_rho);
  s.jump_intensity = c.jump_intensity;
  s.dt = c.dt;
  s.validate();
  return s;
}

QuadraticPortfolio build_portfolio(const PortfolioConfig& c) {
  return QuadraticPortfolio::from_diagonal(to_eigen(c.b), to_eigen(c.lambdas), to_eigen(c.a1));
}

RegressionProblem build_regression(const RegressionConfig& c) {
  const VarianceDivisor divisor = c.divisor == "n-1"   ? VarianceDivisor::NMinusOne
                                  : c.divisor == "n-p" ? VarianceDivisor::NMinusP
                                                       : VarianceDivisor::N;
  if (c.dataset == "longley") {
    const auto d = longley_data();
    return ols_fit(d.X, d.Y, divisor);
  }
  const auto rows = read_csv_rows(c.dataset);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto cols = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd X(n, cols);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 0; j + 1 < cols; ++j) X(i, j + 1) = rows[i][j];
    Y(i) = rows[i][cols - 1];
  }
  return ols_fit(X, Y, divisor);
}

Table run(const RunConfig& cfg) {
  validate(cfg);
  switch (cfg.command) {
    case Command::Solve: return solve(cfg);
    case Command::Estimate: return estimate(cfg);
    case Command::Table2: return table2(cfg);
    case Command::Table3: return table3(cfg);
    case Command::Var: return var(cfg);
    case Command::VarQuantile: return var_quantile(cfg);
    case Command::Bootstrap: return bootstrap(cfg);
    case Command::Coverage: return coverage(cfg);
  }
  throw std::logic_error("unhandled command");
}

}  // namespace tilt::cli
