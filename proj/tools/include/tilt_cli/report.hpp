#pragma once

#include <string>
#include <vector>

#include "tilt_cli/config.hpp"

namespace tilt::cli {

/// A rectangular table of preformatted cells.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string render(Format format) const;
};

/// Fixed-point with `digits` decimals; "nan" and "inf" spelled out.
std::string fixed(double x, int digits);
/// Scientific-or-fixed with `digits` significant figures.
std::string general(double x, int digits = 6);

/// Writes `text` to a temporary file beside `path` and renames it into place,
/// so a failed run never leaves a partial report. Throws std::runtime_error.
void write_atomic(const std::string& path, const std::string& text);

}  // namespace tilt::cli
