#ifndef PMF_STATS_HPP
#define PMF_STATS_HPP

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <span>

#include "pmf/error.hpp"

namespace pmf {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  /// Half-width of the 95% confidence interval for the slope.
  double slope_ci95 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(Errc::invalid_argument, "fit_line needs >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(Errc::invalid_argument, "fit_line: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (f.slope * x[i] + f.intercept);
      rss += e * e;
    }
    f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    f.slope_ci95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * f.slope_stderr;
  }
  return f;
}

}  // namespace pmf

#endif
