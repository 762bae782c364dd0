#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilt::cli {

/// Parse or validation failure. `line` is 0 when the error is not tied to a
/// line of a config file (command-line overrides, cross-field checks).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string field, const std::string& message);
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

enum class Command { Solve, Estimate, Table2, Table3, Var, VarQuantile, Bootstrap, Coverage };
enum class Format { Csv, Markdown };

struct FamilyConfig {
  /// normal, exp1, chi2, gamma, ncchi2, binomial, poisson, uniform, compound-poisson.
  std::string name = "normal";
  double sigma = 1.0;
  double kappa = 1.0;
  double lambda = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  std::int64_t size = 1;
  double prob = 0.5;
  double horizon = 1.0;
  double eta = 0.0;
  double delta2 = 1.0;
  double offset = 0.0;

  bool operator==(const FamilyConfig&) const = default;
};

struct EventConfig {
  std::optional<double> a;
  /// upper, lower or two-sided.
  std::string tail = "upper";
  std::optional<double> lower;
  std::vector<double> p;
  std::vector<double> r_p;

  bool operator==(const EventConfig&) const = default;
};

struct SamplingConfig {
  /// naive, is, both or two-sided (estimate only).
  std::string method = "both";
  std::uint64_t n = 100000;
  std::uint64_t k = 1000;
  std::uint64_t M = 2000;
  std::uint64_t B = 100;
  std::uint64_t m = 50000;
  unsigned workers = 0;

  bool operator==(const SamplingConfig&) const = default;
};

struct SolverSection {
  double tol = 1e-10;
  int max_iter = 200;
  std::optional<double> initial;

  bool operator==(const SolverSection&) const = default;
};

struct PortfolioConfig {
  std::vector<double> b;
  std::vector<double> lambdas;
  std::vector<double> a1;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> delta;
  std::vector<double> eta;
  double rho = 0.0;
  double jump_rho = 0.0;
  double jump_intensity = 0.0;
  double dt = 1.0;
  int max_steps = 40;

  bool operator==(const PortfolioConfig&) const = default;
};

struct CoverageDesign {
  bool importance = false;
  std::uint64_t B = 0;

  bool operator==(const CoverageDesign&) const = default;
};

struct RegressionConfig {
  /// "longley", or a path to a CSV file whose last column is the response.
  std::string dataset = "longley";
  /// Denominator p of T = chi2_n / p; 0 means the number of columns of X.
  int p = 0;
  /// n-1, n-p or n.
  std::string divisor = "n-1";
  /// normal or chi-square.
  std::string family = "normal";
  double nominal = 0.95;
  std::uint64_t trials = 500;
  std::vector<CoverageDesign> designs;

  bool operator==(const RegressionConfig&) const = default;
};

struct RunConfig {
  Command command = Command::Solve;
  std::uint64_t seed = 1;
  std::string out;
  Format format = Format::Csv;
  FamilyConfig family;
  EventConfig event;
  SamplingConfig sampling;
  SolverSection solver;
  PortfolioConfig portfolio;
  RegressionConfig regression;

  bool operator==(const RunConfig&) const = default;
};

const char* to_string(Command c) noexcept;
const char* to_string(Format f) noexcept;

/// Parses the config grammar:
///
///   # comment
///   key = value            (top level: command, seed, out, format)
///   [section]              (family, event, sampling, solver, portfolio, regression)
///   key = v1, v2, v3       (list-valued keys)
///
/// Unknown sections or keys, malformed values and duplicate keys raise
/// ConfigError naming the line and the field.
RunConfig parse_config(const std::string& text);

/// Reads and parses a file. Throws ConfigError if it cannot be read.
RunConfig load_config(const std::string& path);

/// Sets one field from its textual value, as a config line `key = value` in
/// `section` would ("" for the top level).
void set_field(RunConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value, int line = 0);

/// Canonical text form; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& cfg);

/// Checks the fields the command will use against the preconditions of the
/// modules it calls. Throws ConfigError.
void validate(const RunConfig& cfg);

}  // namespace tilt::cli
