#include <CLI11.hpp>
#include <ostream>

#include "tilt/errors.hpp"
#include "tilt_cli/commands.hpp"

namespace tilt::cli {

namespace {

struct Override {
  const char* flag;
  const char* section;
  const char* key;
  const char* help;
  std::string value;
  CLI::Option* option = nullptr;
};

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rare-event probabilities by optimally tilted importance sampling", "tilt"};
  app.set_help_all_flag("--help-all");

  std::string command;
  std::string config_path;
  bool dump_config = false;
  app.add_option("command", command,
                 "solve, estimate, table2, table3, var, var-quantile, bootstrap or coverage");
  app.add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  app.add_flag("--dump-config", dump_config, "Print the effective config instead of running");

  std::vector<Override> overrides = {
      {"--seed", "", "seed", "Master seed", {}},
      {"--out", "", "out", "Report path (stdout when absent)", {}},
      {"--format", "", "format", "csv or markdown", {}},
      {"--family", "family", "name", "Tilting family", {}},
      {"--sigma", "family", "sigma", "Normal standard deviation", {}},
      {"--kappa", "family", "kappa", "Degrees of freedom", {}},
      {"--lambda", "family", "lambda", "Noncentrality, Poisson mean or jump rate", {}},
      {"--alpha", "family", "alpha", "Gamma shape", {}},
      {"--beta", "family", "beta", "Gamma scale", {}},
      {"--size", "family", "size", "Binomial trials", {}},
      {"--prob", "family", "prob", "Binomial success probability", {}},
      {"--a", "event", "a", "Threshold", {}},
      {"--tail", "event", "tail", "upper, lower or two-sided", {}},
      {"--lower", "event", "lower", "Lower threshold of a two-sided event", {}},
      {"--p", "event", "p", "Comma-separated tail probabilities", {}},
      {"--r-p", "event", "r_p", "Comma-separated loss thresholds", {}},
      {"--method", "sampling", "method", "naive, is, both or two-sided", {}},
      {"--n", "sampling", "n", "Samples per estimator", {}},
      {"--k", "sampling", "k", "Samples per replication", {}},
      {"--M", "sampling", "M", "Replications", {}},
      {"--B", "sampling", "B", "Bootstrap resamples", {}},
      {"--m", "sampling", "m", "Reference draws for the VaR tilt", {}},
      {"--workers", "sampling", "workers", "Worker threads (0 = all cores)", {}},
      {"--tol", "solver", "tol", "Relative tolerance", {}},
      {"--max-iter", "solver", "max_iter", "Iteration limit", {}},
      {"--initial", "solver", "initial", "Initial tilt", {}},
      {"--dataset", "regression", "dataset", "longley or a CSV path", {}},
      {"--reg-p", "regression", "p", "Denominator p of the bootstrap statistic", {}},
      {"--divisor", "regression", "divisor", "n-1, n-p or n", {}},
      {"--resample-family", "regression", "family", "normal or chi-square", {}},
      {"--nominal", "regression", "nominal", "Nominal coverage", {}},
      {"--trials", "regression", "trials", "Coverage trials", {}},
      {"--designs", "regression", "designs", "e.g. naive:1000,importance:200", {}},
  };
  for (auto& o : overrides) o.option = app.add_option(o.flag, o.value, o.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!command.empty()) set_field(cfg, "", "command", command);
    for (const auto& o : overrides) {
      if (o.option->count() == 0) continue;
      if (std::string(o.key) == "name" && o.value != cfg.family.name) cfg.family = FamilyConfig{};
    }
    for (const auto& o : overrides) {
      if (o.option->count() > 0) set_field(cfg, o.section, o.key, o.value);
    }
    if (dump_config) {
      out << serialize(cfg);
      return 0;
    }
    if (config_path.empty() && command.empty()) {
      throw ConfigError(0, "command", "no command given");
    }
    validate(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  std::string report;
  try {
    report = run(cfg).render(cfg.format);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    err << "precondition error: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }

  if (cfg.out.empty()) {
    out << report;
    return 0;
  }
  try {
    write_atomic(cfg.out, report);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace tilt::cli
