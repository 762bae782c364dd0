// Longley (1967) employment data, as distributed in the NIST StRD
// linear-regression archive. Columns: GNP deflator, GNP, unemployed,
// armed forces, population aged 14 and over, year; response: total
// derived employment.
#include "tilt/bootstrap.hpp"

namespace tilt {

namespace {

constexpr double kLongley[16][7] = {
    {83.0, 234289.0, 2356.0, 1590.0, 107608.0, 1947.0, 60323.0},
    {88.5, 259426.0, 2325.0, 1456.0, 108632.0, 1948.0, 61122.0},
    {88.2, 258054.0, 3682.0, 1616.0, 109773.0, 1949.0, 60171.0},
    {89.5, 284599.0, 3351.0, 1650.0, 110929.0, 1950.0, 61187.0},
    {96.2, 328975.0, 2099.0, 3099.0, 112075.0, 1951.0, 63221.0},
    {98.1, 346999.0, 1932.0, 3594.0, 113270.0, 1952.0, 63639.0},
    {99.0, 365385.0, 1870.0, 3547.0, 115094.0, 1953.0, 64989.0},
    {100.0, 363112.0, 3578.0, 3350.0, 116219.0, 1954.0, 63761.0},
    {101.2, 397469.0, 2904.0, 3048.0, 117388.0, 1955.0, 66019.0},
    {104.6, 419180.0, 2822.0, 2857.0, 118734.0, 1956.0, 67857.0},
    {108.4, 442769.0, 2936.0, 2798.0, 120445.0, 1957.0, 68169.0},
    {110.8, 444546.0, 4681.0, 2637.0, 121950.0, 1958.0, 66513.0},
    {112.6, 482704.0, 3813.0, 2552.0, 123366.0, 1959.0, 68655.0},
    {114.2, 502601.0, 3931.0, 2514.0, 125368.0, 1960.0, 69564.0},
    {115.7, 518173.0, 4806.0, 2572.0, 127852.0, 1961.0, 69331.0},
    {116.9, 554894.0, 4007.0, 2827.0, 130081.0, 1962.0, 70551.0},
};

}  // namespace

RegressionData longley_data() {
  RegressionData d;
  d.X.resize(16, 7);
  d.Y.resize(16);
  for (int i = 0; i < 16; ++i) {
    d.X(i, 0) = 1.0;
    for (int j = 0; j < 6; ++j) d.X(i, j + 1) = kLongley[i][j];
    d.Y(i) = kLongley[i][6];
  }
  return d;
}

}  // namespace tilt
