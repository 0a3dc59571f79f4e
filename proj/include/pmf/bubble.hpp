#ifndef PMF_BUBBLE_HPP
#define PMF_BUBBLE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pmf/error.hpp"
#include "pmf/field.hpp"
#include "pmf/functional.hpp"
#include "pmf/jet.hpp"
#include "pmf/quadrature.hpp"
#include "pmf/stats.hpp"

namespace pmf {

// ---------------------------------------------------------------------------
// Cutoff
// ---------------------------------------------------------------------------

/// Smooth step: 0 for t <= 0, 1 for t >= 1, e(t)/(e(t)+e(1-t)) with
/// e(t) = exp(-1/t) in between.
template <std::size_t N>
Jet<N> smooth_step(const Jet<N>& t) {
  if (t.value() <= 0.0) return Jet<N>::constant(0.0);
  if (t.value() >= 1.0) return Jet<N>::constant(1.0);
  const Jet<N> a = exp(-1.0 / t);
  const Jet<N> b = exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

/// Radial cutoff: 1 on [0,1/4], 0 on [1/2,inf), psi((1/2 - r)/(1/4)) between.
template <std::size_t N>
Jet<N> cutoff_jet(double r) {
  return smooth_step((0.5 - Jet<N>::variable(r)) * 4.0);
}

inline double cutoff(double r) {
  if (r <= 0.25) return 1.0;
  if (r >= 0.5) return 0.0;
  const double t = (0.5 - r) * 4.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

/// cutoff(r) and its derivatives of order 1..order (order <= 8).
inline std::vector<double> cutoff_derivatives(double r, int order) {
  if (order < 0 || order > 8) throw Error(Errc::invalid_argument, "cutoff derivative order must be in [0,8]");
  const auto j = cutoff_jet<8>(r);
  std::vector<double> out(static_cast<std::size_t>(order) + 1);
  for (int k = 0; k <= order; ++k) out[static_cast<std::size_t>(k)] = j.derivative(static_cast<std::size_t>(k));
  return out;
}

// ---------------------------------------------------------------------------
// Standard profile w_sigma(r) = log(2 sigma / (1 + sigma^2 r^2))
// ---------------------------------------------------------------------------

inline double standard_profile(double sigma, double r) {
  return std::log(2.0 * sigma) - std::log1p(sigma * sigma * r * r);
}

template <std::size_t N>
Jet<N> standard_profile_jet(double sigma, double r) {
  const Jet<N> x = Jet<N>::variable(r);
  return std::log(2.0 * sigma) - log(1.0 + sigma * sigma * (x * x));
}

/// d^j/dr^j w_sigma(r) for j <= 8.
inline double standard_profile_derivative(double sigma, double r, int j) {
  if (j < 0 || j > 8) throw Error(Errc::invalid_argument, "profile derivative order must be in [0,8]");
  return standard_profile_jet<8>(sigma, r).derivative(static_cast<std::size_t>(j));
}

/// v_sigma = cutoff * (w_sigma - w_sigma(1)) + w_sigma(1), as a jet in r.
template <std::size_t N>
Jet<N> profile_jet(double sigma, double r) {
  const double w1 = standard_profile(sigma, 1.0);
  if (r >= 0.5) return Jet<N>::constant(w1);
  return cutoff_jet<N>(r) * (standard_profile_jet<N>(sigma, r) - w1) + w1;
}

inline double profile_value(double sigma, double r) {
  const double w1 = standard_profile(sigma, 1.0);
  if (r >= 0.5) return w1;
  return cutoff(r) * (standard_profile(sigma, r) - w1) + w1;
}

namespace detail {

// Delta^{k/2} of a radial jet in dimension d: Laplacians in pairs, then a
// radial derivative when k is odd.
template <std::size_t N>
double half_laplacian_of(const Jet<N>& f, double r, int d, int k) {
  if (k == 0) return f.value();
  if constexpr (N >= 1) {
    if (k == 1) return differentiate(f).value();
  }
  if constexpr (N >= 2) {
    return half_laplacian_of(radial_laplacian(f, r, d), r, d, k - 2);
  }
  throw Error(Errc::invalid_argument, "jet order too low for requested power");
}

template <class JetFn>
double half_laplacian_dispatch(int m, double r, JetFn&& make) {
  switch (m) {
    case 1: return half_laplacian_of(make(std::integral_constant<std::size_t, 1>{}), r, 2, 1);
    case 2: return half_laplacian_of(make(std::integral_constant<std::size_t, 2>{}), r, 4, 2);
    case 3: return half_laplacian_of(make(std::integral_constant<std::size_t, 3>{}), r, 6, 3);
    case 4: return half_laplacian_of(make(std::integral_constant<std::size_t, 4>{}), r, 8, 4);
    default: throw Error(Errc::unsupported_order, "radial bubble calculus supports 1 <= m <= 4");
  }
}

inline void require_radial_order(int m) {
  if (m < 1 || m > 4) throw Error(Errc::unsupported_order, "radial bubble calculus supports 1 <= m <= 4");
}

}  // namespace detail

/// Delta^{m/2} v_sigma at radius r in R^{2m}; for odd m the radial
/// derivative of Delta^{(m-1)/2} v_sigma.
inline double profile_half_laplacian(double sigma, double r, int m) {
  if (r >= 0.5) return 0.0;
  return detail::half_laplacian_dispatch(m, r, [&](auto order) {
    return profile_jet<decltype(order)::value>(sigma, r);
  });
}

/// Delta^{m/2} w_sigma (no cutoff).
inline double standard_half_laplacian(double sigma, double r, int m) {
  return detail::half_laplacian_dispatch(m, r, [&](auto order) {
    return standard_profile_jet<decltype(order)::value>(sigma, r);
  });
}

/// |S^{2m-1}|: the constant in dx = |S^{2m-1}| r^{2m-1} dr.
inline double unit_sphere_area(int m) { return sphere_volume(2 * m - 1); }

namespace detail {

inline std::vector<double> radial_breaks(double sigma) {
  std::vector<double> b{0.0};
  for (double x = 0.01 / sigma; x < 0.25; x *= 2.0) b.push_back(x);
  b.insert(b.end(), {0.25, 0.375, 0.5});
  return b;
}

}  // namespace detail

/// ∫_{B_1} |Delta^{m/2} v_sigma|^2 dx by adaptive radial quadrature.
inline double radial_energy(double sigma, int m) {
  detail::require_radial_order(m);
  if (!(sigma >= 2.0)) throw Error(Errc::invalid_argument, "radial_energy needs sigma >= 2");
  const double area = unit_sphere_area(m);
  const auto breaks = detail::radial_breaks(sigma);
  auto f = [&](double r) {
    const double h = profile_half_laplacian(sigma, r, m);
    return area * std::pow(r, 2 * m - 1) * h * h;
  };
  return integrate_adaptive(f, breaks).value;
}

/// Leading part only: |S^{2m-1}| ∫_0^1 r^{2m-1} |Delta^{m/2} w_sigma|^2 dr.
inline double radial_leading_energy(double sigma, int m) {
  detail::require_radial_order(m);
  const double area = unit_sphere_area(m);
  auto breaks = detail::radial_breaks(sigma);
  breaks.push_back(1.0);
  auto f = [&](double r) {
    const double h = standard_half_laplacian(sigma, r, m);
    return area * std::pow(r, 2 * m - 1) * h * h;
  };
  return integrate_adaptive(f, breaks).value;
}

/// ∫_{B_1} |Delta^{m/2} v_sigma - cutoff * Delta^{m/2} w_sigma|^2 dx: the
/// terms in which at least one derivative falls on the cutoff.
inline double radial_cutoff_correction(double sigma, int m) {
  detail::require_radial_order(m);
  const double area = unit_sphere_area(m);
  const std::vector<double> breaks{0.25, 0.3125, 0.375, 0.4375, 0.5};
  auto f = [&](double r) {
    const double h = profile_half_laplacian(sigma, r, m) - cutoff(r) * standard_half_laplacian(sigma, r, m);
    return area * std::pow(r, 2 * m - 1) * h * h;
  };
  return integrate_adaptive(f, breaks).value;
}

/// ∫_{B_1} exp(2m v_sigma) dx.
inline double radial_ball_mass(double sigma, int m) {
  detail::require_radial_order(m);
  const double area = unit_sphere_area(m);
  auto breaks = detail::radial_breaks(sigma);
  breaks.push_back(1.0);
  auto f = [&](double r) { return area * std::pow(r, 2 * m - 1) * std::exp(2.0 * m * profile_value(sigma, r)); };
  return integrate_adaptive(f, breaks).value;
}

/// ∫_{B_1} (v_sigma - w_sigma(1)) dx; the integrand vanishes for r >= 1/2.
inline double radial_excess_integral(double sigma, int m) {
  detail::require_radial_order(m);
  const double area = unit_sphere_area(m);
  const double w1 = standard_profile(sigma, 1.0);
  const auto breaks = detail::radial_breaks(sigma);
  auto f = [&](double r) { return area * std::pow(r, 2 * m - 1) * (profile_value(sigma, r) - w1); };
  return integrate_adaptive(f, breaks).value;
}

/// ∫_{R^{2m}} (2/(1+|y|^2))^{2m} dy = vol(S^{2m}): the sigma -> inf limit of
/// radial_ball_mass.
inline double bubble_limit_mass(int m) { return sphere_volume(2 * m); }

struct RadialProfile {
  double sigma = 0.0;
  int m = 1;
  std::vector<double> r;
  std::vector<double> value;           ///< v_sigma(r)
  std::vector<double> half_laplacian;  ///< |Delta^{m/2} v_sigma(r)|
};

inline RadialProfile tabulate_profile(double sigma, int m, int points = 401) {
  detail::require_radial_order(m);
  if (points < 2) throw Error(Errc::invalid_argument, "tabulate_profile needs >= 2 points");
  RadialProfile p;
  p.sigma = sigma;
  p.m = m;
  for (int i = 0; i < points; ++i) {
    // r = 0 itself is skipped; the odd-order derivative terms carry 1/r.
    const double r = std::max(1e-12, static_cast<double>(i) / (points - 1));
    p.r.push_back(r);
    p.value.push_back(profile_value(sigma, r));
    p.half_laplacian.push_back(std::abs(profile_half_laplacian(sigma, r, m)));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Embedding into the torus
// ---------------------------------------------------------------------------

struct BubbleParams {
  double sigma = 2.0;
  double alpha = 0.4;
  std::vector<double> center;  ///< in [0,1)^{2m}; empty means the origin
};

/// min(0.4, sigma^{-1/2}): alpha -> 0 and sigma alpha -> inf.
inline double default_alpha(double sigma) {
  if (!(sigma > 1.0)) throw Error(Errc::invalid_argument, "default_alpha needs sigma > 1");
  return std::min(0.4, 1.0 / std::sqrt(sigma));
}

inline void validate(const BubbleParams& p, int dim) {
  if (!(p.sigma > 1.0)) throw Error(Errc::invalid_argument, "bubble sigma must be > 1");
  if (!(p.alpha > 0.0 && p.alpha <= 0.5 - 1e-9))
    throw Error(Errc::invalid_argument, "bubble alpha must lie in (0, 1/2)");
  if (!p.center.empty()) {
    if (static_cast<int>(p.center.size()) != dim)
      throw Error(Errc::invalid_argument, "bubble center has wrong dimension");
    for (double c : p.center)
      if (!(c >= 0.0 && c < 1.0)) throw Error(Errc::invalid_argument, "bubble center must lie in [0,1)");
  }
}

/// Smallest even n with n * alpha / sigma >= 6.
inline int required_resolution(double sigma, double alpha) {
  int n = static_cast<int>(std::ceil(6.0 * sigma / alpha));
  return n + (n % 2);
}

/// Pre-projection values: v_sigma((x - center)/alpha) inside the dilated ball,
/// log(2 sigma/(1+sigma^2)) elsewhere.
inline std::vector<double> bubble_values(const TorusSpec& spec, const BubbleParams& p) {
  validate(p, spec.dim());
  if (spec.n * (p.alpha / p.sigma) < 6.0)
    throw Error(Errc::under_resolved, "bubble core needs n >= " +
                                          std::to_string(required_resolution(p.sigma, p.alpha)) +
                                          " (have n=" + std::to_string(spec.n) + ")");
  const int d = spec.dim();
  std::vector<double> center = p.center.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : p.center;
  const double w1 = standard_profile(p.sigma, 1.0);
  const std::size_t total = spec.size();
  std::vector<double> values(total, w1);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  const double h = spec.spacing();
  for (std::size_t flat = 0; flat < total; ++flat) {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      double dx = idx[static_cast<std::size_t>(a)] * h - center[static_cast<std::size_t>(a)];
      dx -= std::round(dx);
      r2 += dx * dx;
    }
    const double r = std::sqrt(r2) / p.alpha;
    if (r < 0.5) values[flat] = profile_value(p.sigma, r);
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.n) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return values;
}

/// u_{sigma,alpha}: the embedded profile minus its mean.
inline Field bubble_field(const TorusSpec& spec, const BubbleParams& p) {
  std::vector<double> v = bubble_values(spec, p);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x -= mean;
  return Field::unchecked(spec, std::move(v), true);
}

// ---------------------------------------------------------------------------
// Asymptotics in sigma
// ---------------------------------------------------------------------------

/// Radial evaluation of u_{sigma,alpha} on the flat torus, where the
/// dilation is an isometry up to scale and the energy is dilation-invariant.
struct BubbleSample {
  double sigma = 0.0;
  double alpha = 0.0;
  double norm_sq = 0.0;    ///< ||u||^2 = ∫_{B_1} |Delta^{m/2} v|^2
  double ball_mass = 0.0;  ///< ∫_{B_1} exp(2m v)
  double mean = 0.0;       ///< ∫_M v~
  double log_mass = 0.0;   ///< log ∫_M exp(2m u)
  double energy = 0.0;     ///< I_lambda(u)
};

inline BubbleSample bubble_sample(double sigma, double alpha, double lambda, int m) {
  BubbleParams p{sigma, alpha, {}};
  validate(p, 2 * m);
  BubbleSample s;
  s.sigma = sigma;
  s.alpha = alpha;
  s.norm_sq = radial_energy(sigma, m);
  s.ball_mass = radial_ball_mass(sigma, m);
  const double w1 = standard_profile(sigma, 1.0);
  const double scale = std::pow(alpha, 2 * m);
  const double ball_volume = std::pow(std::numbers::pi, m) / std::tgamma(m + 1.0);
  s.mean = w1 + scale * radial_excess_integral(sigma, m);
  const double mass = std::exp(2.0 * m * w1) * (1.0 - scale * ball_volume) + scale * s.ball_mass;
  s.log_mass = std::log(mass) - 2.0 * m * s.mean;
  s.energy = 0.5 * s.norm_sq - lambda / (2.0 * m) * s.log_mass;
  return s;
}

using AlphaSchedule = std::function<double(double)>;

inline AlphaSchedule fixed_alpha(double alpha) {
  return [alpha](double) { return alpha; };
}

struct BubbleAsymptotics {
  int m = 1;
  double lambda = 0.0;
  std::vector<BubbleSample> samples;
  LinearFit norm_fit;     ///< ||u_sigma||^2 against log sigma
  LinearFit energy_fit;   ///< I_lambda(u_sigma) against log sigma
  double norm_target = 0.0;    ///< 2 Lambda_1
  double energy_target = 0.0;  ///< Lambda_1 - lambda
};

/// Least-squares slopes of ||u_sigma||^2 and I_lambda(u_sigma) in log sigma.
///
/// The default schedule holds alpha at 0.4: on the flat torus there is no
/// metric correction to suppress, and a shrinking alpha feeds
/// -lambda log(alpha) into the energy slope at any finite sigma.
inline BubbleAsymptotics bubble_asymptotics(std::span<const double> sigmas, double lambda, int m,
                                            const AlphaSchedule& alpha = fixed_alpha(0.4)) {
  detail::require_radial_order(m);
  if (sigmas.size() < 3) throw Error(Errc::invalid_argument, "bubble_asymptotics needs >= 3 sigma values");
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    if (!(sigmas[i] > sigmas[i - 1])) throw Error(Errc::invalid_argument, "sigma list must be increasing");
  BubbleAsymptotics out;
  out.m = m;
  out.lambda = lambda;
  std::vector<double> x, yn, ye;
  for (double s : sigmas) {
    out.samples.push_back(bubble_sample(s, alpha(s), lambda, m));
    x.push_back(std::log(s));
    yn.push_back(out.samples.back().norm_sq);
    ye.push_back(out.samples.back().energy);
  }
  out.norm_fit = fit_line(x, yn);
  out.energy_fit = fit_line(x, ye);
  const double big = total_q_curvature(m);
  out.norm_target = 2.0 * big;
  out.energy_target = big - lambda;
  return out;
}

}  // namespace pmf

#endif
