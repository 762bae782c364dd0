#include "tilt/families.hpp"

#include <algorithm>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "continuous_family.hpp"
#include "tilt/errors.hpp"
#include "tilt/numerics.hpp"

namespace tilt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSeriesTail = 1e-14;

using numerics::gamma_p;
using numerics::gamma_p_derivative;
using numerics::gamma_q;
using numerics::log_gamma;

template <class... Ts>
std::string label(const char* head, Ts... args) {
  std::ostringstream out;
  out << head << '(';
  const char* sep = "";
  ((out << sep << args, sep = ","), ...);
  out << ')';
  return out.str();
}

[[noreturn]] void empty_event(const std::string& family, const TailEvent& event) {
  std::ostringstream msg;
  msg << family << ": event {X " << (event.tail == Tail::Upper ? '>' : '<') << ' '
      << event.threshold << "} has probability zero";
  throw DomainError(msg.str());
}

// Integer range [first, last] of support points inside the event.
struct IntRange {
  double first;
  double last;
};

IntRange integer_range(const TailEvent& event, double support_max) {
  if (event.tail == Tail::Upper) {
    return {std::max(0.0, std::floor(event.threshold) + 1.0), support_max};
  }
  return {0.0, std::min(support_max, std::ceil(event.threshold) - 1.0)};
}

// Sum of f(k) w(k) over an integer range given log w; terms are scaled by
// the largest log-weight in the range before exponentiation. Unbounded
// ranges stop once the terms have passed `mode` and become negligible.
struct WeightedSum {
  double sum_w = 0.0;
  double sum_fw = 0.0;
  double log_scale = 0.0;
};

template <class LogW, class F>
WeightedSum weighted_sum(IntRange range, double mode, LogW log_w, F f) {
  WeightedSum out;
  if (range.last < range.first) return out;
  const double ref = std::clamp(std::floor(mode), range.first,
                                std::isfinite(range.last) ? range.last : kInf);
  out.log_scale = log_w(ref);
  for (double k = range.first; k <= range.last; k += 1.0) {
    if (k - range.first > 1e8) throw NumericalError("discrete series did not converge");
    const double w = std::exp(log_w(k) - out.log_scale);
    const double fw = f(k) * w;
    out.sum_w += w;
    out.sum_fw += fw;
    if (!std::isfinite(range.last) && k > mode && w < kSeriesTail * 1e-3 * out.sum_w &&
        std::fabs(fw) <= kSeriesTail * 1e-3 * std::fabs(out.sum_fw)) {
      break;
    }
  }
  return out;
}

class BinomialFamily final : public TiltingFamily {
 public:
  explicit BinomialFamily(BinomialSpec s) : s_(s) {
    if (s.n < 1 || !(s.p > 0.0 && s.p < 1.0)) {
      throw PreconditionError("binomial family requires n >= 1 and 0 < p < 1");
    }
  }
  std::string name() const override { return label("Bin", s_.n, s_.p); }
  ThetaDomain domain() const override { return {}; }
  double psi(double t) const override { return n() * std::log1p(s_.p * std::expm1(t)); }
  double psi_prime(double t) const override { return n() * success(t); }
  double psi_double_prime(double t) const override {
    const double q = success(t);
    return n() * q * (1.0 - q);
  }
  double sample_tilted(double t, Rng& rng) const override {
    return static_cast<double>(
        std::binomial_distribution<std::int64_t>(s_.n, success(t))(rng));
  }
  double conditional_mean(double t, const TailEvent& event) const override {
    const double q = success(t);
    const auto r = integer_range(event, n());
    const auto s = weighted_sum(r, n() * q, [&](double k) { return log_pmf(k, q); },
                                [](double k) { return k; });
    if (!(s.sum_w > 0.0)) empty_event(name(), event);
    return s.sum_fw / s.sum_w;
  }
  double base_expectation(const std::function<double(double)>& f, const TailEvent& event,
                          double) const override {
    const auto r = integer_range(event, n());
    const auto s = weighted_sum(r, n() * s_.p, [&](double k) { return log_pmf(k, s_.p); },
                                f);
    return s.sum_fw * std::exp(s.log_scale);
  }

 private:
  double n() const { return static_cast<double>(s_.n); }
  double success(double t) const { return 1.0 / (1.0 + (1.0 - s_.p) / s_.p * std::exp(-t)); }
  double log_pmf(double k, double q) const {
    return log_gamma(n() + 1.0) - log_gamma(k + 1.0) - log_gamma(n() - k + 1.0) +
           k * std::log(q) + (n() - k) * std::log1p(-q);
  }
  BinomialSpec s_;
};

class PoissonFamily final : public TiltingFamily {
 public:
  explicit PoissonFamily(PoissonSpec s) : s_(s) {
    if (!(s.lambda > 0.0)) throw PreconditionError("poisson family requires lambda > 0");
  }
  std::string name() const override { return label("Pois", s_.lambda); }
  ThetaDomain domain() const override { return {}; }
  double psi(double t) const override { return s_.lambda * std::expm1(t); }
  double psi_prime(double t) const override { return s_.lambda * std::exp(t); }
  double psi_double_prime(double t) const override { return s_.lambda * std::exp(t); }
  double sample_tilted(double t, Rng& rng) const override {
    return static_cast<double>(std::poisson_distribution<std::int64_t>(psi_prime(t))(rng));
  }
  double conditional_mean(double t, const TailEvent& event) const override {
    const double mu = psi_prime(t);
    const auto s = weighted_sum(integer_range(event, kInf), mu,
                                [&](double k) { return log_pmf(k, mu); },
                                [](double k) { return k; });
    if (!(s.sum_w > 0.0)) empty_event(name(), event);
    return s.sum_fw / s.sum_w;
  }
  double base_expectation(const std::function<double(double)>& f, const TailEvent& event,
                          double tilt) const override {
    const double mode = std::max(s_.lambda, psi_prime(tilt));
    const auto s = weighted_sum(integer_range(event, kInf), mode,
                                [&](double k) { return log_pmf(k, s_.lambda); }, f);
    return s.sum_fw * std::exp(s.log_scale);
  }

 private:
  static double log_pmf(double k, double mu) {
    return k * std::log(mu) - mu - log_gamma(k + 1.0);
  }
  PoissonSpec s_;
};

class NormalFamily final : public detail::ContinuousFamily {
 public:
  explicit NormalFamily(NormalSpec s) : s_(s) {
    if (!(s.sigma > 0.0)) throw PreconditionError("normal family requires sigma > 0");
  }
  std::string name() const override {
    return s_.sigma == 1.0 ? "N(0,1)" : label("N", 0, s_.sigma * s_.sigma);
  }
  ThetaDomain domain() const override { return {}; }
  double psi(double t) const override { return 0.5 * var() * t * t; }
  double psi_prime(double t) const override { return var() * t; }
  double psi_double_prime(double) const override { return var(); }
  double sample_tilted(double t, Rng& rng) const override {
    return var() * t + s_.sigma * rng.normal();
  }
  double conditional_mean(double t, const TailEvent& event) const override {
    const double m = var() * t;
    const double z = (event.threshold - m) / s_.sigma;
    if (event.tail == Tail::Upper) return m + s_.sigma * numerics::inverse_mills(z);
    return m - s_.sigma * numerics::inverse_mills(-z);
  }
  double density(double x) const override {
    return numerics::normal_pdf(x / s_.sigma) / s_.sigma;
  }
  double support_lower() const override { return -kInf; }
  double support_upper() const override { return kInf; }

 private:
  double var() const { return s_.sigma * s_.sigma; }
  NormalSpec s_;
};

// Gamma(alpha, scale beta); also serves the exponential and chi-square rows.
class GammaFamily : public detail::ContinuousFamily {
 public:
  GammaFamily(double alpha, double beta, std::string name)
      : alpha_(alpha), beta_(beta), name_(std::move(name)) {
    if (!(alpha > 0.0 && beta > 0.0)) {
      throw PreconditionError("gamma family requires shape > 0 and scale > 0");
    }
    log_norm_ = log_gamma(alpha_) + alpha_ * std::log(beta_);
  }
  std::string name() const override { return name_; }
  ThetaDomain domain() const override { return {-kInf, 1.0 / beta_}; }
  double psi(double t) const override { return -alpha_ * std::log1p(-beta_ * t); }
  double psi_prime(double t) const override { return alpha_ * scale(t); }
  double psi_double_prime(double t) const override {
    const double s = scale(t);
    return alpha_ * s * s;
  }
  double sample_tilted(double t, Rng& rng) const override {
    return std::gamma_distribution<double>(alpha_, scale(t))(rng);
  }
  double conditional_mean(double t, const TailEvent& event) const override {
    require_in_domain(t, "conditional_mean");
    return gamma_conditional_mean(alpha_, scale(t), event, name_);
  }
  double density(double x) const override {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return alpha_ < 1.0 ? kInf : (alpha_ == 1.0 ? 1.0 / beta_ : 0.0);
    return std::exp((alpha_ - 1.0) * std::log(x) - x / beta_ - log_norm_);
  }
  double support_lower() const override { return 0.0; }
  double support_upper() const override { return kInf; }
  bool singular_at_lower() const override { return alpha_ < 1.0; }

  // E[X | X in event] for X ~ Gamma(k, s), from incomplete-gamma ratios.
  static double gamma_conditional_mean(double k, double s, const TailEvent& event,
                                       const std::string& who) {
    const double x = event.threshold / s;
    if (event.tail == Tail::Upper) {
      if (x <= 0.0) return k * s;
      const double q = gamma_q(k, x);
      if (q == 0.0) return event.threshold + s;
      return k * s + s * x * gamma_p_derivative(k, x) / q;
    }
    if (x <= 0.0) empty_event(who, event);
    const double p = gamma_p(k, x);
    if (p == 0.0) return event.threshold * k / (k + 1.0);
    return k * s - s * x * gamma_p_derivative(k, x) / p;
  }

 private:
  double scale(double t) const { return beta_ / (1.0 - beta_ * t); }
  double alpha_;
  double beta_;
  double log_norm_;
  std::string name_;
};

class ExponentialFamily final : public GammaFamily {
 public:
  ExponentialFamily() : GammaFamily(1.0, 1.0, "E(1)") {}
  double sample_tilted(double t, Rng& rng) const override {
    return rng.exponential() / (1.0 - t);
  }
  double conditional_mean(double t, const TailEvent& event) const override {
    require_in_domain(t, "conditional_mean");
    const double rate = 1.0 - t;
    if (event.tail == Tail::Upper) return std::max(event.threshold, 0.0) + 1.0 / rate;
    if (event.threshold <= 0.0) empty_event(name(), event);
    return event.threshold * numerics::tilted_unit_mean(-rate * event.threshold);
  }
};

class NoncentralChiSquareFamily final : public detail::ContinuousFamily {
 public:
  explicit NoncentralChiSquareFamily(NoncentralChiSquareSpec s) : s_(s) {
    if (!(s.kappa > 0.0 && s.lambda >= 0.0)) {
      throw PreconditionError("noncentral chi-square requires kappa > 0 and lambda >= 0");
    }
  }
  std::string name() const override { return label("NCchi2", s_.kappa, s_.lambda); }
  ThetaDomain domain() const override { return {-kInf, 0.5}; }
  double psi(double t) const override {
    const double u = 1.0 - 2.0 * t;
    return s_.lambda * t / u - 0.5 * s_.kappa * std::log(u);
  }
  double psi_prime(double t) const override {
    const double u = 1.0 - 2.0 * t;
    return (s_.lambda + s_.kappa * u) / (u * u);
  }
  double psi_double_prime(double t) const override {
    const double u = 1.0 - 2.0 * t;
    return 4.0 * s_.lambda / (u * u * u) + 2.0 * s_.kappa / (u * u);
  }
  double sample_tilted(double t, Rng& rng) const override {
    const double u = 1.0 - 2.0 * t;
    const double mix = s_.lambda / (2.0 * u);
    const auto i = mix > 0.0 ? std::poisson_distribution<std::int64_t>(mix)(rng) : 0;
    return std::gamma_distribution<double>(0.5 * s_.kappa + static_cast<double>(i),
                                           2.0 / u)(rng);
  }
  // Poisson mixture of Gamma((kappa + 2i)/2, 2/u) components; the series stops
  // once the remaining Poisson weight is below kSeriesTail of the event mass.
  double conditional_mean(double t, const TailEvent& event) const override {
    require_in_domain(t, "conditional_mean");
    const double u = 1.0 - 2.0 * t;
    const double mix = s_.lambda / (2.0 * u);
    const double s = 2.0 / u;
    const double x = event.threshold / s;
    const bool upper = event.tail == Tail::Upper;
    if (upper && x <= 0.0) return psi_prime(t);
    if (!upper && x <= 0.0) empty_event(name(), event);

    double num = 0.0;
    double den = 0.0;
    for (std::uint64_t i = 0;; ++i) {
      const double di = static_cast<double>(i);
      const double w =
          mix > 0.0 ? std::exp(di * std::log(mix) - mix - log_gamma(di + 1.0)) : (i ? 0 : 1);
      const double k = 0.5 * s_.kappa + di;
      const double mass = upper ? gamma_q(k, x) : gamma_p(k, x);
      const double edge = s * x * gamma_p_derivative(k, x);
      num += w * (k * s * mass + (upper ? edge : -edge));
      den += w * mass;
      if (mix == 0.0) break;
      if (di > mix && numerics::poisson_sf(i, mix) < kSeriesTail * den) break;
      if (i > 100000) throw NumericalError("noncentral chi-square series did not converge");
    }
    if (!(den > 0.0)) empty_event(name(), event);
    return num / den;
  }
  double density(double x) const override {
    if (x <= 0.0) return 0.0;
    return boost::math::pdf(
        boost::math::non_central_chi_squared_distribution<double>(s_.kappa, s_.lambda), x);
  }
  double support_lower() const override { return 0.0; }
  double support_upper() const override { return kInf; }
  bool singular_at_lower() const override { return s_.kappa < 2.0; }

 private:
  NoncentralChiSquareSpec s_;
};

class UniformFamily final : public detail::ContinuousFamily {
 public:
  std::string name() const override { return "U(0,1)"; }
  ThetaDomain domain() const override { return {}; }
  double psi(double t) const override { return numerics::tilted_unit_log_norm(t); }
  double psi_prime(double t) const override { return numerics::tilted_unit_mean(t); }
  double psi_double_prime(double t) const override {
    return numerics::tilted_unit_variance(t);
  }
  // Inverse CDF of the density proportional to e^{t x} on [0, 1].
  double sample_tilted(double t, Rng& rng) const override {
    const double u = rng.uniform();
    if (std::fabs(t) < 1e-12) return u;
    if (t > 0.0) return 1.0 + std::log1p((1.0 - u) * std::expm1(-t)) / t;
    return std::log1p(u * std::expm1(t)) / t;
  }
  double conditional_mean(double t, const TailEvent& event) const override {
    const double lo = event.tail == Tail::Upper ? std::max(0.0, event.threshold) : 0.0;
    const double hi = event.tail == Tail::Upper ? 1.0 : std::min(1.0, event.threshold);
    if (!(hi > lo)) empty_event(name(), event);
    const double w = hi - lo;
    return lo + w * numerics::tilted_unit_mean(t * w);
  }
  double density(double x) const override { return x >= 0.0 && x <= 1.0 ? 1.0 : 0.0; }
  double support_lower() const override { return 0.0; }
  double support_upper() const override { return 1.0; }
};

struct FamilyFactory {
  FamilyPtr operator()(const BinomialSpec& s) const {
    return std::make_shared<BinomialFamily>(s);
  }
  FamilyPtr operator()(const PoissonSpec& s) const {
    return std::make_shared<PoissonFamily>(s);
  }
  FamilyPtr operator()(const NormalSpec& s) const { return std::make_shared<NormalFamily>(s); }
  FamilyPtr operator()(const ExponentialSpec&) const {
    return std::make_shared<ExponentialFamily>();
  }
  FamilyPtr operator()(const ChiSquareSpec& s) const {
    if (!(s.kappa > 0.0)) throw PreconditionError("chi-square family requires kappa > 0");
    return std::make_shared<GammaFamily>(0.5 * s.kappa, 2.0, label("chi2", s.kappa));
  }
  FamilyPtr operator()(const GammaSpec& s) const {
    return std::make_shared<GammaFamily>(s.alpha, s.beta, label("Gamma", s.alpha, s.beta));
  }
  FamilyPtr operator()(const NoncentralChiSquareSpec& s) const {
    return std::make_shared<NoncentralChiSquareFamily>(s);
  }
  FamilyPtr operator()(const UniformSpec&) const { return std::make_shared<UniformFamily>(); }
};

}  // namespace

FamilyPtr make_family(const FamilySpec& spec) { return std::visit(FamilyFactory{}, spec); }

double exponential_theta_star(double a) {
  if (!(a > 0.0)) throw PreconditionError("exponential_theta_star requires a > 0");
  // (sqrt(1 + a^2) - 1) / a without cancellation for small a.
  return a / (std::sqrt(1.0 + a * a) + 1.0);
}

double normal_tilt_equation(double a, double theta) {
  return theta - (numerics::inverse_mills(a + theta) - theta);
}

double ncchi2_density_mixture(double kappa, double lambda, double x) {
  if (x <= 0.0) return 0.0;
  const double half = 0.5 * lambda;
  double total = 0.0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double di = static_cast<double>(i);
    const double k = 0.5 * kappa + di;
    const double log_w = half > 0.0 ? di * std::log(half) - half - log_gamma(di + 1.0)
                                    : (i == 0 ? 0.0 : -kInf);
    const double log_chi = (k - 1.0) * std::log(x) - 0.5 * x - log_gamma(k) - k * std::log(2.0);
    const double term = std::exp(log_w + log_chi);
    total += term;
    if (half == 0.0) break;
    if (di > half && di > 0.5 * x && term < 1e-17 * total) break;
  }
  return total;
}

double ncchi2_density_bessel(double kappa, double lambda, double x) {
  if (x <= 0.0) return 0.0;
  const double order = 0.25 * kappa - 0.5;
  return 0.5 * std::exp(-0.5 * (x + lambda)) * std::pow(x / lambda, order) *
         boost::math::cyl_bessel_i(0.5 * kappa - 1.0, std::sqrt(lambda * x));
}

}  // namespace tilt
