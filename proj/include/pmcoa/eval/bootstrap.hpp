#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace pmcoa::eval {

enum class CiMethod { Percentile, BCa };
std::string to_string(CiMethod m);
CiMethod ci_method_from_string(const std::string& s);

struct BootstrapOptions {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  CiMethod method = CiMethod::Percentile;
};

struct Interval {
  double estimate = 0;  // mean of the input
  double low = 0;
  double high = 0;
  // BCa only: true when the correction was undefined and the percentile
  // interval was returned instead.
  bool fell_back = false;
};

void to_json(nlohmann::json& j, const Interval& i);

// Nonparametric bootstrap interval for the mean. Percentile: quantiles of the
// resampled means at (1-level)/2 and (1+level)/2, with linear interpolation.
// BCa: the same quantiles shifted by bias correction and a jackknife
// acceleration estimate. Deterministic given the seed. ValidationError on
// empty input, zero resamples, or level outside (0, 1).
Interval bootstrap_ci(std::span<const double> scores, const BootstrapOptions& options = {});

// Standard normal CDF and its inverse.
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace pmcoa::eval
