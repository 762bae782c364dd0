#pragma once

#include <iosfwd>
#include <string>

#include "tilt/bootstrap.hpp"
#include "tilt/tilt_core.hpp"
#include "tilt/var_engine.hpp"
#include "tilt_cli/config.hpp"
#include "tilt_cli/report.hpp"

namespace tilt::cli {

FamilyPtr build_family(const FamilyConfig& cfg);

/// Jump-diffusion model and diagonal-form portfolio from the [portfolio] section.
JumpDiffusionSpec build_model(const PortfolioConfig& cfg);
QuadraticPortfolio build_portfolio(const PortfolioConfig& cfg);

/// Longley or a CSV file (header optional, last column the response); an
/// intercept column is prepended to the predictors.
RegressionProblem build_regression(const RegressionConfig& cfg);

/// Validates, runs the command and returns its report table. Module errors
/// propagate unchanged.
Table run(const RunConfig& cfg);

/// Full command-line entry point: parses flags, runs, writes the report to
/// --out (atomically) or to `out`. Returns the process exit code:
/// 0 success, 2 config error, 3 domain or precondition error, 4 numerical failure.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tilt::cli
