#include "pmcoa/util/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmcoa::util {

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  s.total = std::accumulate(values.begin(), values.end(), 0.0);
  s.mean = s.total / static_cast<double>(values.size());
  s.median = sorted_quantile(values, 0.5);
  s.q1 = sorted_quantile(values, 0.25);
  s.q3 = sorted_quantile(values, 0.75);
  s.iqr = s.q3 - s.q1;
  return s;
}

}  // namespace pmcoa::util
