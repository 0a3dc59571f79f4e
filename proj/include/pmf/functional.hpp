#ifndef PMF_FUNCTIONAL_HPP
#define PMF_FUNCTIONAL_HPP

#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "pmf/error.hpp"
#include "pmf/field.hpp"

namespace pmf {

/// Surface measure of the unit sphere S^d in R^{d+1}.
inline double sphere_volume(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

/// (2m-1)! vol(S^{2m}): total Q-curvature of the round 2m-sphere, for any m >= 1.
inline double total_q_curvature(int m) {
  return std::tgamma(2.0 * m) * sphere_volume(2 * m);
}

struct Constants {
  int m = 1;
  double Lambda1 = 0.0;
  double lambda1 = 0.0;
  double threshold_low = 0.0;
  double threshold_high = 0.0;
  double poincare_Cm = 0.0;
};

inline Constants constants(int m) {
  if (m != 1 && m != 2) throw Error(Errc::unsupported_order, "constants: m must be 1 or 2");
  Constants c;
  c.m = m;
  c.Lambda1 = total_q_curvature(m);
  c.lambda1 = std::pow(4.0 * std::numbers::pi * std::numbers::pi, m);
  c.threshold_low = c.Lambda1;  // unit volume
  c.threshold_high = c.lambda1 / (2.0 * m);
  c.poincare_Cm = 1.0 / c.lambda1;
  return c;
}

struct EnergyReport {
  double lambda = 0.0;
  double dirichlet = 0.0;
  double log_mass = 0.0;
  double energy = 0.0;
};

/// I_lambda(u) = 1/2 ||u||^2 - lambda/(2m) log mean(exp(2m u)).
inline EnergyReport energy(const Field& u, double lambda) {
  require_mean_zero(u, "energy");
  if (!(lambda >= 0.0)) throw Error(Errc::invalid_argument, "lambda must be >= 0");
  const int m = u.spec().m;
  EnergyReport r;
  r.lambda = lambda;
  r.dirichlet = 0.5 * sobolev_norm_sq(u);
  r.log_mass = log_integrate_exp(u, 2.0 * m);
  r.energy = r.dirichlet - lambda / (2.0 * m) * r.log_mass;
  return r;
}

inline double energy_value(const Field& u, double lambda) { return energy(u, lambda).energy; }

/// (-Delta)^m u + lambda - lambda exp(2mu)/mean(exp(2mu)).
///
/// The exact residual integrates to zero; the rounding-level mean is checked
/// and then removed.
inline Field el_residual(const Field& u, double lambda) {
  require_mean_zero(u, "el_residual");
  const int m = u.spec().m;
  const Field lin = apply_power_laplacian(u, m);
  const Field p = exp_density(u, 2.0 * m);
  std::vector<double> r(u.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = lin[i] + lambda - lambda * p[i];
    scale = std::max(scale, std::abs(lin[i]) + lambda * (1.0 + p[i]));
  }
  const Field raw = Field::unchecked(u.spec(), std::move(r), false);
  assert(std::abs(integrate(raw)) <= 1e-10 * (1.0 + scale));
  (void)scale;
  return project_mean_zero(raw);
}

/// H^m Riesz representative of I'_lambda(u).
inline Field gradient_h(const Field& u, double lambda) {
  return solve_poisson_power(el_residual(u, lambda), u.spec().m);
}

/// Dual norm ||I'_lambda(u)|| = ||gradient_h||.
inline double gradient_norm(const Field& u, double lambda) {
  return std::sqrt(sobolev_norm_sq(gradient_h(u, lambda)));
}

/// L^2 representative of the second variation in direction v:
/// (-Delta)^m v - 2m lambda [p v - p ∫p v], p = exp(2mu)/∫exp(2mu), mean-zero projected.
inline Field hessian_action(const Field& u, double lambda, const Field& v) {
  require_mean_zero(u, "hessian_action");
  require_mean_zero(v, "hessian_action");
  require_same_spec(u.spec(), v.spec());
  const int m = u.spec().m;
  const Field lin = apply_power_laplacian(v, m);
  const Field p = exp_density(u, 2.0 * m);
  const double pv = l2_inner(p, v);
  std::vector<double> h(u.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = lin[i] - 2.0 * m * lambda * (p[i] * v[i] - p[i] * pv);
  return project_mean_zero(Field::unchecked(u.spec(), std::move(h), false));
}

/// I(u) + <I'(u), v> + 1/2 ||v||^2 - I(u+v).
///
/// The quadratic parts cancel identically, leaving
/// (mu/2m)[log Z(u+v) - log Z(u)] - mu ∫ p_u v, which is evaluated directly.
inline double expansion_gap(const Field& u, const Field& v, double mu) {
  require_mean_zero(u, "expansion_gap");
  require_mean_zero(v, "expansion_gap");
  if (!(mu >= 0.0)) throw Error(Errc::invalid_argument, "mu must be >= 0");
  if (mu == 0.0) return 0.0;
  const int m = u.spec().m;
  const double c = 2.0 * m;
  const double log_z_uv = log_integrate_exp(u + v, c);
  const double log_z_u = log_integrate_exp(u, c);
  const double pv = l2_inner(exp_density(u, c), v);
  return mu / c * (log_z_uv - log_z_u) - mu * pv;
}

/// ||gradient_h(u, mu) - gradient_h(u, nu)|| / |mu - nu|.
inline double dual_lipschitz_gap(const Field& u, double mu, double nu) {
  if (mu == nu) throw Error(Errc::invalid_argument, "dual_lipschitz_gap needs mu != nu");
  const Field d = gradient_h(u, mu) - gradient_h(u, nu);
  return std::sqrt(std::max(0.0, sobolev_norm_sq(d))) / std::abs(mu - nu);
}

/// Largest dual_lipschitz_gap over a sample family: the empirical C~_1.
inline double empirical_dual_lipschitz(std::span<const Field> family, double mu, double nu) {
  double worst = 0.0;
  for (const auto& u : family) worst = std::max(worst, dual_lipschitz_gap(u, mu, nu));
  return worst;
}

/// Second variation at u = 0 on v: ||v||^2 - 2m lambda ∫ v^2.
inline double second_variation_at_zero(const Field& v, double lambda) {
  const Field z = zero_field(v.spec());
  return l2_inner(hessian_action(z, lambda, v), v);
}

/// Smallest value of the quadratic form at 0 over unit-L^2 Fourier modes
/// sqrt(2) cos(2 pi k.x) with 0 < |k|_inf <= kmax.
inline double min_second_variation_at_zero(const TorusSpec& spec, double lambda, int kmax = 2) {
  double best = std::numeric_limits<double>::infinity();
  const int d = spec.dim();
  std::vector<int> k(static_cast<std::size_t>(d), -kmax);
  while (true) {
    bool nonzero = false;
    for (int v : k) nonzero |= v != 0;
    if (nonzero) {
      const Field mode = project_mean_zero(sample(spec, [&](std::span<const double> x) {
        double ph = 0.0;
        for (int a = 0; a < d; ++a) ph += k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        return std::sqrt(2.0) * std::cos(2.0 * std::numbers::pi * ph);
      }));
      best = std::min(best, second_variation_at_zero(mode, lambda));
    }
    int a = d - 1;
    while (a >= 0 && ++k[static_cast<std::size_t>(a)] > kmax) k[static_cast<std::size_t>(a--)] = -kmax;
    if (a < 0) break;
  }
  return best;
}

}  // namespace pmf

#endif
