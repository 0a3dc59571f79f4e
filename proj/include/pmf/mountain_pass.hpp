#ifndef PMF_MOUNTAIN_PASS_HPP
#define PMF_MOUNTAIN_PASS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmf/bubble.hpp"
#include "pmf/error.hpp"
#include "pmf/field.hpp"
#include "pmf/functional.hpp"
#include "pmf/solver.hpp"

namespace pmf {

/// Throws unless Lambda_1 < lambda < lambda_1/(2m).
inline void require_mountain_pass_interval(double lambda, int m) {
  const Constants c = constants(m);
  if (!(lambda > c.threshold_low && lambda < c.threshold_high))
    throw Error(Errc::interval_violation, "lambda = " + std::to_string(lambda) + " lies outside ]" +
                                              std::to_string(c.threshold_low) + ", " +
                                              std::to_string(c.threshold_high) + "[");
}

/// Throws if lambda is (numerically) a positive multiple of Lambda_1.
inline void require_off_quantized(double lambda, int m) {
  const double big = constants(m).Lambda1;
  const double q = lambda / big;
  if (q >= 0.5 && std::abs(q - std::round(q)) <= 1e-12 * std::max(1.0, q))
    throw Error(Errc::interval_violation, "lambda is a multiple of Lambda_1");
}

// ---------------------------------------------------------------------------
// Endpoint u0
// ---------------------------------------------------------------------------

enum class EndpointFamily { cutoff_bubble, grid_spike };

inline const char* family_name(EndpointFamily f) {
  return f == EndpointFamily::cutoff_bubble ? "cutoff-bubble" : "grid-spike";
}

struct Endpoint {
  Field field;
  EndpointFamily family = EndpointFamily::cutoff_bubble;
  double scale = 0.0;   ///< sigma for cutoff bubbles, core width w for grid spikes
  double energy = 0.0;
  double norm_sq = 0.0;
  bool resolved = true; ///< whether the resolution guard held for this endpoint
};

/// Uncut Liouville profile -log(1 + d(x,p)^2/w^2), mean-zero.
inline Field liouville_spike(const TorusSpec& spec, double w, std::span<const double> center) {
  const Field raw = sample(spec, [&](std::span<const double> x) {
    const double d = torus_distance(x, center);
    return -std::log1p(d * d / (w * w));
  });
  return project_mean_zero(raw);
}

namespace detail {

/// H^m steepest descent with backtracking, then Newton once the gradient is small.
inline Field descend_to_minimum(Field u, double lambda, int max_steps) {
  double e = energy_value(u, lambda);
  double step = 1.0;
  for (int it = 0; it < max_steps; ++it) {
    const Field g = gradient_h(u, lambda);
    const double gg = sobolev_norm_sq(g);
    if (std::sqrt(gg) < 1e-6) break;
    bool moved = false;
    for (double s = std::min(1.0, 2.0 * step); s > 1e-12; s *= 0.5) {
      const Field trial = axpby(1.0, u, -s, g);
      const double et = energy_value(trial, lambda);
      if (et <= e - 1e-4 * s * gg) {
        u = trial;
        e = et;
        step = s;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  const SolveResult polished = newton_solve(u, lambda);
  if (polished.converged && polished.energy <= e + 1e-9 && polished.min_hessian_eig > 0.0)
    return polished.field;
  return u;
}

}  // namespace detail

/// Endpoint with I_lambda(u0) < 0 and ||u0||^2 >= 1.
///
/// The cutoff bubble family is searched first (sigma doubling from 2 while the
/// resolution guard holds), accepting I < -1. Its energy only turns negative
/// at sigma far beyond any grid, so the search then falls back to the
/// lowest-energy Liouville spike of sub-grid width, relaxed to the nearest
/// discrete local minimum, accepting I < 0.
inline Endpoint find_u0(double lambda, const TorusSpec& spec) {
  require_mountain_pass_interval(lambda, spec.m);
  const std::vector<double> origin(static_cast<std::size_t>(spec.dim()), 0.0);
  for (double sigma = 2.0;; sigma *= 2.0) {
    const BubbleParams p{sigma, 0.4, origin};
    if (spec.n * (p.alpha / p.sigma) < 6.0) break;
    Field u = bubble_field(spec, p);
    const EnergyReport e = energy(u, lambda);
    if (e.energy < -1.0 && 2.0 * e.dirichlet >= 1.0)
      return Endpoint{std::move(u), EndpointFamily::cutoff_bubble, sigma, e.energy, 2.0 * e.dirichlet, true};
  }
  double best_w = 0.0;
  double best_e = std::numeric_limits<double>::infinity();
  for (double w = spec.spacing(); w > 1e-3 * spec.spacing(); w *= 0.8) {
    const double e = energy_value(liouville_spike(spec, w, origin), lambda);
    if (e < best_e) {
      best_e = e;
      best_w = w;
    }
  }
  Field u = detail::descend_to_minimum(liouville_spike(spec, best_w, origin), lambda, 400);
  const EnergyReport e = energy(u, lambda);
  if (!(e.energy < 0.0 && 2.0 * e.dirichlet >= 1.0))
    throw Error(Errc::under_resolved, "no endpoint with negative energy on n=" + std::to_string(spec.n) +
                                          " (best energy " + std::to_string(e.energy) + ")");
  return Endpoint{std::move(u), EndpointFamily::grid_spike, best_w, e.energy, 2.0 * e.dirichlet,
                  spec.n * best_w >= 6.0};
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

struct PathState {
  std::vector<Field> nodes;      ///< nodes[0] = 0, nodes.back() = u0
  std::vector<double> energies;
  double lambda = 0.0;
  int sweeps = 0;
  bool stalled = false;

  std::size_t segments() const { return nodes.size() - 1; }
  std::size_t top() const {
    return static_cast<std::size_t>(std::max_element(energies.begin(), energies.end()) - energies.begin());
  }
  double max_energy() const { return *std::max_element(energies.begin(), energies.end()); }
};

inline PathState init_path(const Field& u0, int P, double lambda) {
  if (P < 8) throw Error(Errc::invalid_argument, "a path needs P >= 8 segments");
  require_mean_zero(u0, "init_path");
  PathState path;
  path.lambda = lambda;
  path.nodes.reserve(static_cast<std::size_t>(P) + 1);
  path.nodes.push_back(zero_field(u0.spec()));
  for (int i = 1; i < P; ++i) path.nodes.push_back((static_cast<double>(i) / P) * u0);
  path.nodes.push_back(u0);
  for (const Field& f : path.nodes) path.energies.push_back(energy_value(f, lambda));
  return path;
}

enum class RelaxMode { top_three, full };

struct RelaxOptions {
  RelaxMode mode = RelaxMode::top_three;
  double initial_step = 1.0;
  double min_step = 1e-10;
  bool reparametrize = true;
  double peak_weight = 4.0;  ///< extra node density near the energy maximum
};

namespace detail {

/// Gradient with the component along the local path tangent removed (H^m inner product).
inline Field transverse_gradient(const PathState& path, std::size_t i) {
  const Field g = gradient_h(path.nodes[i], path.lambda);
  const Field tau = path.nodes[i + 1] - path.nodes[i - 1];
  const double tt = sobolev_norm_sq(tau);
  if (tt <= 0.0) return g;
  return axpby(1.0, g, -sobolev_inner(g, tau) / tt, tau);
}

/// Backtracking descent of one interior node; true if its energy dropped.
inline bool descend_node(PathState& path, std::size_t i, const RelaxOptions& opt) {
  const Field g = transverse_gradient(path, i);
  const double gg = sobolev_norm_sq(g);
  if (gg <= 0.0) return false;
  for (double s = opt.initial_step; s >= opt.min_step; s *= 0.5) {
    const Field trial = axpby(1.0, path.nodes[i], -s, g);
    double e = 0.0;
    try {
      e = energy_value(trial, path.lambda);
    } catch (const Error& err) {
      if (err.code() != Errc::exp_overflow) throw;
      continue;
    }
    if (e <= path.energies[i] - 1e-4 * s * gg) {
      path.nodes[i] = trial;
      path.energies[i] = e;
      return true;
    }
  }
  return false;
}

/// Re-interpolates interior nodes at equal increments of energy-weighted H^m arclength.
inline PathState redistribute(const PathState& path, double peak_weight) {
  const std::size_t P = path.segments();
  const double emax = path.max_energy();
  const double emin = *std::min_element(path.energies.begin(), path.energies.end());
  const double span = emax > emin ? emax - emin : 1.0;
  std::vector<double> cum(P + 1, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    const double d = std::sqrt(std::max(0.0, sobolev_norm_sq(path.nodes[i + 1] - path.nodes[i])));
    const double mid = 0.5 * (path.energies[i] + path.energies[i + 1]);
    cum[i + 1] = cum[i] + d * (1.0 + peak_weight * (mid - emin) / span);
  }
  PathState out = path;
  if (!(cum[P] > 0.0)) return out;
  std::size_t seg = 0;
  for (std::size_t j = 1; j < P; ++j) {
    const double target = cum[P] * static_cast<double>(j) / static_cast<double>(P);
    while (seg + 1 < P && cum[seg + 1] < target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    out.nodes[j] = axpby(1.0 - t, path.nodes[seg], t, path.nodes[seg + 1]);
    out.energies[j] = energy_value(out.nodes[j], path.lambda);
  }
  return out;
}

}  // namespace detail

/// Transverse descent sweeps on a path with fixed endpoints.
///
/// Each sweep lowers the top node and its two neighbours (or every interior
/// node in RelaxMode::full), then redistributes nodes. A redistribution is
/// kept only if it does not raise the path maximum, so the maximum is
/// non-increasing from sweep to sweep.
inline PathState relax_path(PathState path, int steps, const RelaxOptions& opt = {}) {
  const std::size_t P = path.segments();
  for (int s = 0; s < steps; ++s) {
    const double before = path.max_energy();
    std::vector<std::size_t> targets;
    if (opt.mode == RelaxMode::full) {
      for (std::size_t i = 1; i < P; ++i) targets.push_back(i);
    } else {
      const std::size_t k = path.top();
      for (std::size_t i : {k == 0 ? std::size_t{0} : k - 1, k, k + 1})
        if (i >= 1 && i < P && std::find(targets.begin(), targets.end(), i) == targets.end()) targets.push_back(i);
    }
    bool moved = false;
    for (std::size_t i : targets) moved |= detail::descend_node(path, i, opt);
    if (opt.reparametrize) {
      PathState candidate = detail::redistribute(path, opt.peak_weight);
      if (candidate.max_energy() <= path.max_energy()) {
        candidate.sweeps = path.sweeps;
        path = std::move(candidate);
      }
    }
    ++path.sweeps;
    if (path.max_energy() > before) throw Error(Errc::non_convergence, "path maximum increased");
    if (!moved) {
      path.stalled = true;
      break;
    }
  }
  return path;
}

// ---------------------------------------------------------------------------
// Min-max driver
// ---------------------------------------------------------------------------

struct MountainPassOptions {
  double tol = 1e-10;         ///< Newton tolerance on the polished critical point
  int max_sweeps = 400;
  int P = 16;
  int check_every = 5;        ///< sweeps between Newton hand-off attempts
  double handoff = 0.5;       ///< top-node gradient norm below which Newton is tried
  RelaxOptions relax{};
};

struct MPResult {
  double c_estimate = 0.0;  ///< max energy along the final path
  Field maximizer;
  double grad_norm = 0.0;
  int iterations = 0;       ///< relaxation sweeps
  bool converged = false;
  SolveResult solution;     ///< Newton-polished critical point
  Endpoint endpoint;
  PathState path;
};

namespace detail {

/// Newton from the top node; accepted only as a non-trivial saddle with I > 0.
inline bool try_polish(MPResult& out, const MountainPassOptions& opt) {
  const std::size_t k = out.path.top();
  NewtonOptions nopt;
  nopt.tol = opt.tol;
  SolveResult r = newton_solve(out.path.nodes[k], out.path.lambda, nopt);
  if (!r.converged || r.energy <= 0.0 || sobolev_norm_sq(r.field) < 1e-2 || !(r.min_hessian_eig < 0.0))
    return false;
  out.path.nodes[k] = r.field;
  out.path.energies[k] = r.energy;
  // Lower the other nodes that still sit above the spliced saddle.
  for (int pass = 0; pass < 200; ++pass) {
    bool moved = false;
    for (std::size_t i = 1; i < out.path.segments(); ++i)
      if (i != k && out.path.energies[i] > r.energy) moved |= descend_node(out.path, i, opt.relax);
    if (!moved) break;
  }
  out.solution = std::move(r);
  out.maximizer = out.solution.field;
  out.grad_norm = out.solution.grad_norm;
  out.c_estimate = out.path.max_energy();
  out.converged = true;
  return true;
}

}  // namespace detail

/// Relaxes a given path at its own lambda and polishes the top node.
inline MPResult mountain_pass_from(PathState path, Endpoint endpoint, const MountainPassOptions& opt = {}) {
  const double lambda = path.lambda;
  MPResult out;
  out.endpoint = std::move(endpoint);
  out.path = std::move(path);
  out.path.stalled = false;
  const int budget = out.path.sweeps + opt.max_sweeps;
  while (out.path.sweeps < budget) {
    out.path = relax_path(std::move(out.path), opt.check_every, opt.relax);
    const std::size_t k = out.path.top();
    out.grad_norm = gradient_norm(out.path.nodes[k], lambda);
    if ((out.grad_norm <= opt.handoff || out.path.stalled) && detail::try_polish(out, opt)) break;
    if (out.path.stalled) break;
  }
  out.iterations = out.path.sweeps;
  if (!out.converged) {
    out.maximizer = out.path.nodes[out.path.top()];
    out.c_estimate = out.path.max_energy();
  }
  return out;
}

/// Numerical mountain pass between 0 and find_u0, finished by Newton.
inline MPResult mountain_pass(double lambda, const TorusSpec& spec, const MountainPassOptions& opt = {}) {
  require_mountain_pass_interval(lambda, spec.m);
  require_off_quantized(lambda, spec.m);
  Endpoint endpoint = find_u0(lambda, spec);
  PathState path = init_path(endpoint.field, opt.P, lambda);
  return mountain_pass_from(std::move(path), std::move(endpoint), opt);
}

struct LevelRow {
  double lambda = 0.0;
  double c_estimate = 0.0;
  double grad_norm = 0.0;
  int sweeps = 0;
  bool converged = false;
  bool warm_start = false;  ///< path inherited from the previous grid point
  Field maximizer;
};

struct LevelSweep {
  std::vector<LevelRow> rows;
  int violations = 0;  ///< adjacent pairs with c rising by more than the slack
  double slack = 0.02;
};

/// Mountain-pass levels over an increasing lambda grid.
///
/// Each grid point starts from the previous relaxed path, re-evaluated at
/// the new lambda, whenever its endpoint still has negative energy there;
/// otherwise a fresh endpoint and straight path are used.
inline LevelSweep level_sweep(std::span<const double> lambdas, const TorusSpec& spec,
                              const MountainPassOptions& opt = {}, double slack = 0.02) {
  if (lambdas.empty()) throw Error(Errc::invalid_argument, "level_sweep needs a non-empty grid");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1])) throw Error(Errc::invalid_argument, "level_sweep grid must be increasing");
  for (double l : lambdas) {
    require_mountain_pass_interval(l, spec.m);
    require_off_quantized(l, spec.m);
  }
  LevelSweep sweep;
  sweep.slack = slack;
  std::optional<MPResult> prev;
  for (double l : lambdas) {
    MPResult r;
    bool warm = false;
    if (prev && energy_value(prev->path.nodes.back(), l) < 0.0) {
      PathState path = prev->path;
      path.lambda = l;
      path.sweeps = 0;
      for (std::size_t i = 0; i < path.nodes.size(); ++i) path.energies[i] = energy_value(path.nodes[i], l);
      Endpoint endpoint = prev->endpoint;
      endpoint.energy = path.energies.back();
      r = mountain_pass_from(std::move(path), std::move(endpoint), opt);
      warm = true;
    } else {
      r = mountain_pass(l, spec, opt);
    }
    LevelRow row;
    row.lambda = l;
    row.c_estimate = r.c_estimate;
    row.grad_norm = r.grad_norm;
    row.sweeps = r.iterations;
    row.converged = r.converged;
    row.warm_start = warm;
    row.maximizer = r.maximizer;
    sweep.rows.push_back(std::move(row));
    prev = std::move(r);
  }
  for (std::size_t i = 1; i < sweep.rows.size(); ++i)
    if (sweep.rows[i].c_estimate > sweep.rows[i - 1].c_estimate + slack * std::abs(sweep.rows[i - 1].c_estimate))
      ++sweep.violations;
  return sweep;
}

}  // namespace pmf

#endif
