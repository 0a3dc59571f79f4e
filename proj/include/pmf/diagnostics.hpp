#ifndef PMF_DIAGNOSTICS_HPP
#define PMF_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "pmf/bubble.hpp"
#include "pmf/error.hpp"
#include "pmf/field.hpp"
#include "pmf/functional.hpp"
#include "pmf/quadrature.hpp"
#include "pmf/solver.hpp"
#include "pmf/stats.hpp"

namespace pmf {

// ---------------------------------------------------------------------------
// Concentration of the nonlinear mass
// ---------------------------------------------------------------------------

struct QuantizationReport {
  std::vector<double> center;  ///< grid point of max u
  double lambda = 0.0;
  std::vector<double> radii;
  std::vector<double> mass;    ///< lambda ∫_{B_r} e^{2mu} / ∫ e^{2mu}
  bool has_peak = false;
  double plateau_radius = 0.0;
  double plateau_mass = 0.0;
  int nearest_N = 0;
  double deviation = 0.0;      ///< |plateau_mass - N Lambda_1| / Lambda_1
};

/// Mass curve around the maximum of u on radii spaced `radius_step` apart
/// (default: the grid spacing) out to the torus diameter, so the last entry
/// is exactly lambda.
///
/// The plateau is the first radius beyond the peak of dmass/dr at which the
/// derivative drops below `plateau_fraction` of that peak.
inline QuantizationReport concentration(const Field& u, double lambda, double plateau_fraction = 0.05,
                                        double radius_step = 0.0) {
  require_mean_zero(u, "concentration");
  if (!(lambda > 0.0)) throw Error(Errc::invalid_argument, "concentration needs lambda > 0");
  const auto& spec = u.spec();
  const int d = spec.dim();
  const double h = spec.spacing();
  const double dr = radius_step > 0.0 ? radius_step : h;
  const double r_max = 0.5 * std::sqrt(static_cast<double>(d));
  const auto bins = static_cast<std::size_t>(std::ceil(r_max / dr)) + 1;

  QuantizationReport rep;
  rep.lambda = lambda;
  rep.center = grid_point(spec, u.argmax());
  const double umax = u.max();
  const double two_m = 2.0 * spec.m;
  std::vector<double> bin_mass(bins, 0.0);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t flat = 0; flat < u.size(); ++flat) {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      double dx = idx[static_cast<std::size_t>(a)] * h - rep.center[static_cast<std::size_t>(a)];
      dx -= std::round(dx);
      r2 += dx * dx;
    }
    // Bin j holds points with (j-1) dr < r <= j dr; the center sits in bin 0.
    const auto j = std::min(bins - 1, static_cast<std::size_t>(std::ceil(std::sqrt(r2) / dr - 1e-12)));
    bin_mass[j] += std::exp(two_m * (u[flat] - umax));
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.n) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  double total = 0.0;
  for (double b : bin_mass) total += b;
  double running = 0.0;
  for (std::size_t j = 0; j < bins; ++j) {
    running += bin_mass[j];
    rep.radii.push_back(static_cast<double>(j) * dr);
    rep.mass.push_back(j + 1 == bins ? lambda : lambda * running / total);
  }

  const Constants c = constants(spec.m);
  rep.has_peak = umax - u.min() > 1e-12 * (1.0 + u.max_abs());
  if (!rep.has_peak) return rep;
  std::vector<double> slope(bins, 0.0);
  for (std::size_t j = 1; j < bins; ++j) slope[j] = (rep.mass[j] - rep.mass[j - 1]) / dr;
  const auto peak = static_cast<std::size_t>(std::max_element(slope.begin(), slope.end()) - slope.begin());
  std::size_t stop = bins - 1;
  for (std::size_t j = peak + 1; j < bins; ++j)
    if (slope[j] < plateau_fraction * slope[peak]) {
      stop = j;
      break;
    }
  rep.plateau_radius = rep.radii[stop];
  rep.plateau_mass = rep.mass[stop];
  rep.nearest_N = rep.plateau_mass > 0.5 * c.Lambda1 ? static_cast<int>(std::lround(rep.plateau_mass / c.Lambda1)) : 0;
  rep.deviation = std::abs(rep.plateau_mass - rep.nearest_N * c.Lambda1) / c.Lambda1;
  return rep;
}

// ---------------------------------------------------------------------------
// Adams functional
// ---------------------------------------------------------------------------

/// log ∫ exp(m Lambda_1 u^2 / ||u||^2), evaluated with the maximum factored out.
inline double log_adams_value(const Field& u) {
  require_mean_zero(u, "adams_value");
  const double nsq = sobolev_norm_sq(u);
  if (!(nsq > 0.0)) throw Error(Errc::invalid_argument, "adams_value needs a non-zero field");
  const double c = u.spec().m * total_q_curvature(u.spec().m) / nsq;
  const double top = c * u.max_abs() * u.max_abs();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::exp(c * u[i] * u[i] - top);
  return top + std::log(s / static_cast<double>(u.size()));
}

inline double adams_value(const Field& u) {
  const double lv = log_adams_value(u);
  if (lv > std::log(std::numeric_limits<double>::max()))
    throw Error(Errc::exp_overflow, "adams_value exceeds double range");
  return std::exp(lv);
}

/// Adams functional of u_{sigma,alpha} by radial quadrature, for sigma far
/// beyond what a grid can resolve.
inline double radial_adams_value(double sigma, double alpha, int m) {
  const BubbleSample s = bubble_sample(sigma, alpha, 0.0, m);
  const double c = m * total_q_curvature(m) / s.norm_sq;
  const double w1 = standard_profile(sigma, 1.0);
  const double scale = std::pow(alpha, 2 * m);
  const double ball_volume = std::pow(std::numbers::pi, m) / std::tgamma(m + 1.0);
  const double area = unit_sphere_area(m);
  auto breaks = detail::radial_breaks(sigma);
  breaks.push_back(1.0);
  auto f = [&](double r) {
    const double v = profile_value(sigma, r) - s.mean;
    return area * std::pow(r, 2 * m - 1) * std::exp(c * v * v);
  };
  const double outside = (1.0 - scale * ball_volume) * std::exp(c * (w1 - s.mean) * (w1 - s.mean));
  return outside + scale * integrate_adaptive(f, breaks).value;
}

// ---------------------------------------------------------------------------
// Coercivity below Lambda_1
// ---------------------------------------------------------------------------

struct CoercivitySample {
  double norm_sq = 0.0;
  double energy = 0.0;
};

inline CoercivitySample coercivity_sample(const Field& u, double lambda) {
  const EnergyReport e = energy(u, lambda);
  return {2.0 * e.dirichlet, e.energy};
}

inline CoercivitySample coercivity_sample(const BubbleSample& b) { return {b.norm_sq, b.energy}; }

struct CoercivityBand {
  double lambda = 0.0;
  double coefficient = 0.0;  ///< 1/2 - lambda/(2 Lambda_1)
  double C = 0.0;            ///< max over the fit family of coefficient ||u||^2 - I
  double slack = 0.1;
  std::size_t validated = 0;
  std::size_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  ///< min of I - (coefficient ||u||^2 - (1+slack) C)
  bool holds() const { return violations == 0; }
};

/// Fits C in I >= coefficient ||u||^2 - C and checks it on held-out samples.
inline CoercivityBand coercivity_band(double lambda, int m, std::span<const CoercivitySample> fit,
                                      std::span<const CoercivitySample> validation, double slack = 0.1) {
  const Constants c = constants(m);
  if (!(lambda >= 0.0)) throw Error(Errc::invalid_argument, "coercivity_band needs lambda >= 0");
  if (!(lambda < c.Lambda1)) throw Error(Errc::interval_violation, "coercivity is only claimed for lambda < Lambda_1");
  if (fit.empty()) throw Error(Errc::invalid_argument, "coercivity_band needs a non-empty fit family");
  CoercivityBand band;
  band.lambda = lambda;
  band.coefficient = 0.5 - lambda / (2.0 * c.Lambda1);
  band.slack = slack;
  band.C = -std::numeric_limits<double>::infinity();
  for (const auto& s : fit) band.C = std::max(band.C, band.coefficient * s.norm_sq - s.energy);
  const double allowance = band.C + slack * std::abs(band.C) + 1e-12;
  for (const auto& s : validation) {
    const double margin = s.energy - (band.coefficient * s.norm_sq - allowance);
    band.worst_margin = std::min(band.worst_margin, margin);
    ++band.validated;
    if (margin < 0.0) ++band.violations;
  }
  return band;
}

// ---------------------------------------------------------------------------
// Green function of (-Delta)^m
// ---------------------------------------------------------------------------

struct GreenField {
  std::vector<double> y;
  Field values;
  double log_coefficient = std::numeric_limits<double>::quiet_NaN();
  double log_target = 0.0;  ///< 2 / Lambda_1
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t fit_points = 0;
};

/// Discrete Green function sum_{k != 0} e^{2 pi i k (x-y)} / (4 pi^2 |k|^2)^m
/// at the grid point with flat index `y_flat`, with a least-squares fit of
/// G against log(1/r) over 4/n <= r <= 1/8.
inline GreenField green_field(const TorusSpec& spec, std::size_t y_flat) {
  if (y_flat >= spec.size()) throw Error(Errc::invalid_argument, "green_field base point outside the grid");
  GreenField g;
  g.y = grid_point(spec, y_flat);
  const std::vector<double> k2 = wave_norm_sq(spec);
  std::vector<std::complex<double>> c(spec.size(), 0.0);
  for (std::size_t flat = 1; flat < c.size(); ++flat) {
    const auto idx = unflatten(spec, flat);
    double phase = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) phase -= 2.0 * std::numbers::pi * wave_number(idx[a], spec.n) * g.y[a];
    c[flat] = std::polar(1.0 / std::pow(laplacian_eigenvalue(k2[flat]), spec.m), phase);
  }
  g.values = inverse_transform(Spectrum(spec, std::move(c)), true);
  g.log_target = 2.0 / total_q_curvature(spec.m);
  g.r_min = 4.0 / spec.n;
  g.r_max = 0.125;
  std::vector<double> x, v;
  for (std::size_t flat = 0; flat < spec.size(); ++flat) {
    const std::vector<double> p = grid_point(spec, flat);
    const double r = torus_distance(p, g.y);
    if (r < g.r_min || r > g.r_max) continue;
    x.push_back(-std::log(r));
    v.push_back(g.values[flat]);
  }
  g.fit_points = x.size();
  if (x.size() >= 2 && x.front() != x.back()) {
    const LinearFit fit = fit_line(x, v);
    g.log_coefficient = fit.slope;
    g.intercept = fit.intercept;
  }
  return g;
}

/// |<(-Delta)^m u, G_y> - u(y)| / max|u| for a mean-zero grid field u.
inline double green_reproduction_error(const GreenField& g, const Field& u, std::size_t y_flat) {
  require_same_spec(g.values.spec(), u.spec());
  const double lhs = l2_inner(apply_power_laplacian(u, u.spec().m), g.values);
  return std::abs(lhs - u[y_flat]) / std::max(u.max_abs(), std::numeric_limits<double>::min());
}

// ---------------------------------------------------------------------------
// Small-lambda non-existence
// ---------------------------------------------------------------------------

/// Checks on one converged candidate taken from the small-lambda argument.
struct InequalityChain {
  double log_mass = 0.0;         ///< log ∫ e^{2mu}; Jensen: >= 0
  double norm_sq = 0.0;          ///< ||u||^2
  double identity_rhs = 0.0;     ///< lambda ∫ e^{2mu} u / ∫ e^{2mu}
  double sup_bound = 0.0;        ///< lambda max u
  std::size_t pointwise_violations = 0;  ///< points where log(1/d) b > 1/d + b (log b - 1)
  bool jensen_ok = true;
  bool identity_ok = true;
  bool sup_ok = true;
  bool ok() const { return jensen_ok && identity_ok && sup_ok && pointwise_violations == 0; }
};

inline InequalityChain check_inequality_chain(const Field& u, double lambda) {
  InequalityChain ch;
  const auto& spec = u.spec();
  const double two_m = 2.0 * spec.m;
  ch.log_mass = log_integrate_exp(u, two_m);
  ch.norm_sq = sobolev_norm_sq(u);
  const Field p = exp_density(u, two_m);
  double pu = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) pu += p[i] * u[i];
  ch.identity_rhs = lambda * pu / static_cast<double>(u.size());
  ch.sup_bound = lambda * u.max();
  ch.jensen_ok = ch.log_mass >= -1e-14;
  ch.identity_ok = std::abs(ch.norm_sq - ch.identity_rhs) <= 1e-6 * std::max(ch.norm_sq, std::abs(ch.identity_rhs)) + 1e-12;
  ch.sup_ok = ch.norm_sq <= ch.sup_bound + 1e-6;
  const std::size_t y = u.argmax();
  const std::vector<double> py = grid_point(spec, y);
  for (std::size_t flat = 0; flat < u.size(); ++flat) {
    if (flat == y) continue;
    const double dist = torus_distance(grid_point(spec, flat), py);
    const double b = std::exp(two_m * u[flat]);
    const double lhs = -std::log(dist) * b;
    const double rhs = 1.0 / dist + two_m * u[flat] * b - b;
    if (lhs > rhs + 1e-12 * (std::abs(lhs) + std::abs(rhs))) ++ch.pointwise_violations;
  }
  return ch;
}

struct NonexistenceRow {
  double lambda = 0.0;
  int seeds = 0;
  int converged = 0;
  int failed = 0;
  int nontrivial = 0;           ///< converged with ||u|| > trivial_tol
  double max_norm = 0.0;        ///< max ||u|| over converged results
  double max_ratio = 0.0;       ///< max ||u||^2 / lambda^2 over nontrivial results
  std::size_t distinct = 0;
  int chain_failures = 0;       ///< converged results failing an inequality check
  bool in_regime = false;       ///< lambda < Lambda_1 / (8m)
};

struct NonexistenceReport {
  int m = 1;
  double regime_marker = 0.0;  ///< Lambda_1 / (8m)
  double trivial_tol = 1e-8;
  std::vector<NonexistenceRow> rows;
  bool only_trivial() const {
    for (const auto& r : rows)
      if (r.nontrivial > 0) return false;
    return true;
  }
};

/// Multi-start at every lambda of the grid; the same seed is used at each.
inline NonexistenceReport nonexistence_sweep(std::span<const double> lambdas, const TorusSpec& spec, int n_seeds,
                                             std::uint64_t seed, const MultiStartOptions& opt = {},
                                             double trivial_tol = 1e-8) {
  NonexistenceReport rep;
  rep.m = spec.m;
  rep.regime_marker = total_q_curvature(spec.m) / (8.0 * spec.m);
  rep.trivial_tol = trivial_tol;
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw Error(Errc::invalid_argument, "nonexistence_sweep needs lambda >= 0");
    NonexistenceRow row;
    row.lambda = l;
    row.seeds = n_seeds;
    row.in_regime = l < rep.regime_marker;
    const MultiStartReport ms = multi_start(l, spec, n_seeds, seed, opt);
    row.distinct = ms.distinct.size();
    for (const SolveResult& r : ms.results) {
      if (!r.converged) {
        ++row.failed;
        continue;
      }
      ++row.converged;
      const double nsq = sobolev_norm_sq(r.field);
      const double nrm = std::sqrt(nsq);
      row.max_norm = std::max(row.max_norm, nrm);
      if (nrm > trivial_tol) {
        ++row.nontrivial;
        if (l > 0.0) row.max_ratio = std::max(row.max_ratio, nsq / (l * l));
      }
      if (!check_inequality_chain(r.field, l).ok()) ++row.chain_failures;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace pmf

#endif
