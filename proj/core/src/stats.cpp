#include "openset/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "openset/error.hpp"

namespace openset {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::DomainError, "normal_quantile needs 0 < p < 1");

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r + 6.7265770927008700853e+4) * r +
                4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r + 3.9307895800092710610e+4) * r +
                2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }

  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
             1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
             1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
             2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
             7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -x : x;
}

double normal_quantile_upper(double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::DomainError, "normal_quantile_upper needs 0 < q < 1");
  return -normal_quantile(q);
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  // Summing offsets from the first value keeps constant inputs exact.
  const double x0 = xs.front();
  double acc = 0.0;
  for (double x : xs) acc += x - x0;
  return x0 + acc / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double ci_half_width(std::span<const double> xs, double z) {
  if (xs.size() < 2) return 0.0;
  return z * sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

double welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::DegenerateSample, "Welch test needs >= 2 points per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = std::pow(sample_stddev(a), 2) / na;
  const double vb = std::pow(sample_stddev(b), 2) / nb;
  if (va == 0.0 && vb == 0.0) throw Error(ErrorCode::DegenerateSample, "both samples have zero variance");
  const double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  if (t == 0.0) return 1.0;
  const boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidConfig, "paired samples differ in length");
  if (x.size() < 2) throw Error(ErrorCode::DegenerateSample, "need at least 2 pairs");
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double r = pearson_unchecked(x, y);
  if (std::isnan(r)) throw Error(ErrorCode::DegenerateVariance, "constant sample has no correlation");
  return r;
}

double regression_slope(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorCode::DegenerateVariance, "constant regressor");
  return sxy / sxx;
}

SpearmanTrend spearman_trend(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3) throw Error(ErrorCode::DegenerateSample, "trend test needs >= 3 points");
  std::vector<double> position(n);
  std::iota(position.begin(), position.end(), 1.0);
  std::vector<double> ranks = average_ranks(values);

  SpearmanTrend out;
  out.rho = pearson_unchecked(position, ranks);
  if (std::isnan(out.rho)) throw Error(ErrorCode::DegenerateVariance, "constant values have no trend");

  if (n <= 9) {
    out.exact = true;
    std::vector<double> perm = ranks;
    std::sort(perm.begin(), perm.end());
    std::size_t total = 0, extreme = 0;
    do {
      ++total;
      if (pearson_unchecked(position, perm) >= out.rho - 1e-12) ++extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    // next_permutation skips duplicate arrangements of tied ranks; each
    // distinct arrangement is equally likely, so the ratio is unchanged.
    out.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    return out;
  }

  const double df = static_cast<double>(n) - 2.0;
  if (out.rho >= 1.0) {
    out.p_value = 0.0;
    return out;
  }
  const double t = out.rho * std::sqrt(df / (1.0 - out.rho * out.rho));
  const boost::math::students_t_distribution<double> dist(df);
  out.p_value = boost::math::cdf(boost::math::complement(dist, t));
  return out;
}

}  // namespace openset
