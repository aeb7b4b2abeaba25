#pragma once

#include <span>
#include <vector>

namespace pmcoa::util {

// Quantile of an ascending-sorted sample using linear interpolation between
// order statistics (the "type 7" definition used by numpy and R defaults).
// Precondition: !sorted.empty(), 0 <= q <= 1.
double sorted_quantile(std::span<const double> sorted, double q);

struct Summary {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double total = 0.0;
};

// Exact summary; sorts a copy. Empty input yields an all-zero summary.
Summary summarize(std::vector<double> values);

}  // namespace pmcoa::util
