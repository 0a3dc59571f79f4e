#ifndef PMF_QUADRATURE_HPP
#define PMF_QUADRATURE_HPP

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <span>
#include <cstdio>
#include <string>

#include "pmf/error.hpp"

namespace pmf {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod (G15/K31) over consecutive breakpoints.
///
/// Each panel is refined to relative accuracy 1e-9; the summed error
/// estimate must end up below max(abs_tol, 1e-8 |value|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, std::span<const double> breaks, double abs_tol = 1e-8) {
  QuadratureResult out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    double err = 0.0;
    out.value += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, breaks[i], breaks[i + 1], 15, 1e-9, &err);
    out.error += err;
  }
  if (!std::isfinite(out.value) || out.error > std::max(abs_tol, 1e-8 * std::abs(out.value)))
  {
    char msg[96];
    std::snprintf(msg, sizeof msg, "adaptive quadrature did not converge (error estimate %.3g)", out.error);
    throw Error(Errc::quadrature_failure, msg);
  }
  return out;
}

}  // namespace pmf

#endif
