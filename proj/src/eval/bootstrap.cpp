#include "pmcoa/eval/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <vector>

#include "pmcoa/error.hpp"
#include "pmcoa/util/quantile.hpp"
#include "pmcoa/util/rng.hpp"

namespace pmcoa::eval {

std::string to_string(CiMethod m) { return m == CiMethod::Percentile ? "percentile" : "bca"; }

CiMethod ci_method_from_string(const std::string& s) {
  if (s == "percentile") return CiMethod::Percentile;
  if (s == "bca" || s == "BCa") return CiMethod::BCa;
  throw ValidationError("unknown CI method '" + s + "' (percentile or bca)");
}

void to_json(nlohmann::json& j, const Interval& i) {
  j = {{"estimate", i.estimate}, {"low", i.low}, {"high", i.high}};
  if (i.fell_back) j["fell_back_to_percentile"] = true;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  // Acklam's rational approximation, then one Halley step on the exact CDF.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - lo) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

namespace {

double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Interval bootstrap_ci(std::span<const double> scores, const BootstrapOptions& options) {
  if (scores.empty()) throw ValidationError("bootstrap_ci: empty input");
  if (options.resamples == 0) throw ValidationError("bootstrap_ci: resamples must be >= 1");
  if (!(options.level > 0 && options.level < 1)) throw ValidationError("bootstrap_ci: level must be in (0, 1)");
  const std::size_t n = scores.size();
  Interval out;
  out.estimate = mean_of(scores);

  util::SplitMix64 rng(options.seed);
  std::vector<double> means(options.resamples);
  std::vector<double> draw(n);
  for (auto& m : means) {
    for (auto& x : draw) x = scores[rng.below(n)];
    m = mean_of(draw);
  }
  std::sort(means.begin(), means.end());

  const double alpha = (1 - options.level) / 2;
  double q_lo = alpha, q_hi = 1 - alpha;
  if (options.method == CiMethod::BCa) {
    const auto below = std::count_if(means.begin(), means.end(), [&](double m) { return m < out.estimate; });
    const double z0 = normal_quantile(static_cast<double>(below) / static_cast<double>(means.size()));
    // Jackknife means: leave-one-out of a mean.
    double total = 0;
    for (double x : scores) total += x;
    std::vector<double> jack(n);
    double jbar = 0;
    for (std::size_t i = 0; i < n; ++i) {
      jack[i] = n > 1 ? (total - scores[i]) / static_cast<double>(n - 1) : scores[i];
      jbar += jack[i];
    }
    jbar /= static_cast<double>(n);
    double num = 0, den = 0;
    for (double t : jack) {
      const double dlt = jbar - t;
      num += dlt * dlt * dlt;
      den += dlt * dlt;
    }
    const double acc = den > 0 ? num / (6 * std::pow(den, 1.5)) : std::numeric_limits<double>::quiet_NaN();
    auto adjust = [&](double q) {
      const double z = normal_quantile(q);
      return normal_cdf(z0 + (z0 + z) / (1 - acc * (z0 + z)));
    };
    const double a1 = adjust(alpha), a2 = adjust(1 - alpha);
    if (std::isfinite(z0) && std::isfinite(a1) && std::isfinite(a2)) {
      q_lo = a1;
      q_hi = a2;
    } else {
      out.fell_back = true;
    }
  }
  out.low = util::sorted_quantile(means, std::clamp(q_lo, 0.0, 1.0));
  out.high = util::sorted_quantile(means, std::clamp(q_hi, 0.0, 1.0));
  return out;
}

}  // namespace pmcoa::eval
