#ifndef PMF_SOLVER_HPP
#define PMF_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pmf/error.hpp"
#include "pmf/field.hpp"
#include "pmf/functional.hpp"
#include "pmf/krylov.hpp"
#include "pmf/parallel.hpp"

namespace pmf {

enum class SolveStatus { converged, max_iterations, singular_hessian, line_search_failure, overflow };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::singular_hessian: return "singular-hessian";
    case SolveStatus::line_search_failure: return "line-search-failure";
    case SolveStatus::overflow: return "overflow";
  }
  return "unknown";
}

struct SolveResult {
  Field field;
  double lambda = 0.0;
  double residual_l2 = 0.0;  ///< L^2 norm of el_residual
  double grad_norm = 0.0;    ///< H^m dual norm of I'_lambda
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
  double min_hessian_eig = 0.0;  ///< Ritz value of the preconditioned Hessian nearest 0
  std::vector<double> residual_history;
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 40;
  double singular_tol = 1e-6;  ///< |Ritz value| below which the Hessian counts as singular
  int lanczos_steps = 24;
  int gmres_max_iter = 300;
};

namespace detail {

/// Krylov work happens in the whitened variable y = (-Delta)^{m/2} v, where
/// the H^m inner product becomes the plain grid L^2 product and the
/// preconditioned Hessian becomes the L^2-symmetric operator
/// y -> y + (-Delta)^{-m/2} N (-Delta)^{-m/2} y,
/// N v = -2m lambda p (v - ∫p v) with p the normalized density.
inline LinearOperator whitened_hessian(const Field& u, double lambda) {
  const int m = u.spec().m;
  const Field p = exp_density(u, 2.0 * m);
  return [lambda, m, p](const Field& y) {
    const Field v = solve_poisson_power(y, 0.5 * m);
    const double pv = l2_inner(p, v);
    std::vector<double> h(v.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = -2.0 * m * lambda * p[i] * (v[i] - pv);
    return y + solve_poisson_power(project_mean_zero(Field::unchecked(v.spec(), std::move(h), false)), 0.5 * m);
  };
}

inline Field whiten(const Field& v) { return apply_power_laplacian(v, 0.5 * v.spec().m); }
inline Field unwhiten(const Field& y) { return solve_poisson_power(y, 0.5 * y.spec().m); }

inline double l2_dot(const Field& a, const Field& b) { return l2_inner(a, b); }

/// Deterministic pseudo-random mean-zero start vector for Lanczos.
inline Field lanczos_start(const TorusSpec& spec) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g;
  std::vector<double> v(spec.size());
  for (double& x : v) x = g(rng);
  return project_mean_zero(Field::unchecked(spec, std::move(v), false));
}

/// Whitened, L^2-orthonormal basis of the translation modes d_a u, which span
/// the kernel of I''(u) forced by the torus symmetry at any solution.
inline std::vector<Field> translation_modes(const Field& u) {
  std::vector<Field> basis;
  for (int a = 0; a < u.spec().dim(); ++a) {
    Field t = whiten(partial_derivative(u, a));
    for (const Field& b : basis) t = axpby(1.0, t, -l2_inner(t, b), b);
    const double nrm = l2_norm(t);
    if (nrm > 1e-10) basis.push_back((1.0 / nrm) * t);
  }
  return basis;
}

inline Field project_out(Field y, const std::vector<Field>& basis) {
  for (const Field& b : basis) y = axpby(1.0, y, -l2_inner(y, b), b);
  return y;
}

/// Ritz value nearest 0 of the preconditioned Hessian restricted to the
/// complement of the translation modes.
inline double ritz_nearest_zero(const Field& u, double lambda, int steps) {
  const LinearOperator H = whitened_hessian(u, lambda);
  const std::vector<Field> modes = translation_modes(u);
  const LinearOperator P = [&](const Field& y) { return project_out(y, modes); };
  const LinearOperator A = [&](const Field& y) { return P(H(P(y))); };
  const std::vector<double> ritz = lanczos_ritz_values(A, P(lanczos_start(u.spec())), l2_dot, steps, P);
  double best = ritz.front();
  for (double v : ritz)
    if (std::abs(v) < std::abs(best)) best = v;
  return best;
}

inline void fill_report(SolveResult& r, double lambda) {
  r.residual_l2 = l2_norm(el_residual(r.field, lambda));
  r.grad_norm = gradient_norm(r.field, lambda);
  r.energy = energy_value(r.field, lambda);
}

}  // namespace detail

/// Smallest-magnitude eigenvalue of (-Delta)^{-m} I''_lambda(u) off the
/// translation modes, estimated by Lanczos.
inline double hessian_eigen_nearest_zero(const Field& u, double lambda, int steps = 24) {
  require_mean_zero(u, "hessian_eigen_nearest_zero");
  return detail::ritz_nearest_zero(project_mean_zero(u), lambda, steps);
}

/// Newton-Krylov root finding on el_residual.
///
/// Linear systems are solved by GMRES on the (-Delta)^{-m}-preconditioned
/// Hessian in the H^m inner product with forcing term min(1e-2, ||I'||),
/// floored so the inner residual never has to drop below 1e-2 tol.
/// Steps are damped by backtracking on the gradient norm.
inline SolveResult newton_solve(const Field& guess, double lambda, const NewtonOptions& opt = {}) {
  require_mean_zero(guess, "newton_solve");
  if (!(lambda >= 0.0)) throw Error(Errc::invalid_argument, "lambda must be >= 0");
  SolveResult r;
  r.lambda = lambda;
  r.field = project_mean_zero(guess);
  try {
    Field g = gradient_h(r.field, lambda);
    double gnorm = std::sqrt(std::max(0.0, sobolev_norm_sq(g)));
    for (r.iterations = 0;; ++r.iterations) {
      r.residual_l2 = l2_norm(el_residual(r.field, lambda));
      r.residual_history.push_back(r.residual_l2);
      r.grad_norm = gnorm;
      if (r.residual_l2 <= opt.tol && gnorm <= 10.0 * opt.tol) {
        r.status = SolveStatus::converged;
        break;
      }
      if (r.iterations >= opt.max_iter) {
        r.status = SolveStatus::max_iterations;
        break;
      }
      r.min_hessian_eig = detail::ritz_nearest_zero(r.field, lambda, opt.lanczos_steps);
      if (std::abs(r.min_hessian_eig) < opt.singular_tol) {
        r.status = SolveStatus::singular_hessian;
        break;
      }
      const LinearOperator A = detail::whitened_hessian(r.field, lambda);
      const double forcing = std::max(std::min(1e-2, gnorm), 1e-2 * opt.tol / gnorm);
      const KrylovResult step = gmres(A, detail::whiten((-1.0) * g), detail::l2_dot, forcing, opt.gmres_max_iter);
      if (!step.converged && step.residual > 0.5 * gnorm) {
        r.status = SolveStatus::singular_hessian;
        break;
      }
      const Field delta = detail::unwhiten(step.x);
      double t = 1.0;
      bool accepted = false;
      for (int k = 0; k < 30 && !accepted; ++k, t *= 0.5) {
        try {
          const Field trial = axpby(1.0, r.field, t, delta);
          const Field gt = gradient_h(trial, lambda);
          const double gt_norm = std::sqrt(std::max(0.0, sobolev_norm_sq(gt)));
          if (gt_norm <= (1.0 - 1e-4 * t) * gnorm || gt_norm <= 1e-3 * opt.tol) {
            r.field = trial;
            g = gt;
            gnorm = gt_norm;
            accepted = true;
          }
        } catch (const Error& e) {
          if (e.code() != Errc::exp_overflow) throw;
        }
      }
      if (!accepted) {
        r.status = SolveStatus::line_search_failure;
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != Errc::exp_overflow) throw;
    r.status = SolveStatus::overflow;
  }
  r.converged = r.status == SolveStatus::converged;
  if (r.status != SolveStatus::overflow) detail::fill_report(r, lambda);
  return r;
}

// ---------------------------------------------------------------------------
// Continuation in lambda
// ---------------------------------------------------------------------------

enum class BranchEnd { reached_end, newton_failure, blowup_guard };

inline const char* branch_end_name(BranchEnd e) {
  switch (e) {
    case BranchEnd::reached_end: return "reached-end";
    case BranchEnd::newton_failure: return "newton-failure";
    case BranchEnd::blowup_guard: return "blowup-guard";
  }
  return "unknown";
}

struct ContinuationOptions {
  double dlambda_min = 1e-4;
  double dlambda_max = 1.0;
  double blowup_cap = 12.0;  ///< stop once max|u| exceeds this
  int max_steps = 2000;
  NewtonOptions newton{};
};

struct Branch {
  std::vector<SolveResult> points;   ///< every entry converged, lambda monotone
  std::vector<double> step_history;  ///< signed lambda increments, accepted or not
  BranchEnd reason = BranchEnd::reached_end;
  SolveResult guard_trigger;         ///< the converged solution that exceeded the cap
};

/// Natural-parameter continuation from a converged start toward lambda_end.
///
/// The predictor extrapolates the last two points linearly in lambda. A
/// step is rejected (and dlambda halved) when Newton fails or collapses onto
/// the trivial solution from a non-trivial branch; dlambda grows by 1.5
/// after every accepted step.
inline Branch continuation(const SolveResult& start, double lambda_end, double dlambda0,
                           const ContinuationOptions& opt = {}) {
  if (!(dlambda0 > 0.0)) throw Error(Errc::invalid_argument, "continuation step must be > 0");
  if (!start.converged) throw Error(Errc::non_convergence, "continuation needs a converged start");
  Branch branch;
  branch.points.push_back(start);
  const double dir = lambda_end >= start.lambda ? 1.0 : -1.0;
  double dl = std::min(dlambda0, opt.dlambda_max);
  for (int step = 0; step < opt.max_steps; ++step) {
    const SolveResult& cur = branch.points.back();
    const double remaining = std::abs(lambda_end - cur.lambda);
    if (remaining <= 1e-12 * std::max(1.0, std::abs(lambda_end))) {
      branch.reason = BranchEnd::reached_end;
      return branch;
    }
    const double h = std::min(dl, remaining);
    const double target = remaining <= dl ? lambda_end : cur.lambda + dir * h;
    Field guess = cur.field;
    if (branch.points.size() >= 2) {
      const SolveResult& prev = branch.points[branch.points.size() - 2];
      const double ratio = (target - cur.lambda) / (cur.lambda - prev.lambda);
      guess = axpby(1.0 + ratio, cur.field, -ratio, prev.field);
    }
    branch.step_history.push_back(target - cur.lambda);
    SolveResult r = newton_solve(guess, target, opt.newton);
    const double cur_norm = sobolev_norm_sq(cur.field);
    const bool collapsed = cur_norm > 1e-6 && sobolev_norm_sq(r.field) < 1e-3 * cur_norm;
    if (r.converged && !collapsed) {
      if (r.field.max_abs() > opt.blowup_cap) {
        branch.guard_trigger = std::move(r);
        branch.reason = BranchEnd::blowup_guard;
        return branch;
      }
      branch.points.push_back(std::move(r));
      dl = std::min(1.5 * dl, opt.dlambda_max);
      continue;
    }
    dl *= 0.5;
    if (dl < opt.dlambda_min) {
      branch.reason = BranchEnd::newton_failure;
      return branch;
    }
  }
  branch.reason = BranchEnd::newton_failure;
  return branch;
}

// ---------------------------------------------------------------------------
// Multi-start
// ---------------------------------------------------------------------------

struct MultiStartOptions {
  int kmax = 1;              ///< seeds use Fourier modes with 0 < |k|_inf <= kmax
  double norm_min = 0.1;     ///< seed ||u|| is drawn uniformly from [norm_min, norm_max]
  double norm_max = 3.0;
  double dedup_tol = 1e-6;   ///< L^2 distance after optimal translation
  unsigned threads = 0;
  NewtonOptions newton{};
};

struct MultiStartReport {
  std::vector<Field> seeds;
  std::vector<SolveResult> results;    ///< one per seed, in seed order
  std::vector<std::size_t> distinct;   ///< indices of pairwise-distinct converged results
};

/// Random low-mode mean-zero field with prescribed Sobolev norm.
inline Field random_low_mode_field(const TorusSpec& spec, std::mt19937_64& rng, int kmax, double norm) {
  std::normal_distribution<double> gauss;
  std::vector<std::complex<double>> c(spec.size(), 0.0);
  for (std::size_t flat = 1; flat < c.size(); ++flat) {
    const auto idx = unflatten(spec, flat);
    bool inside = true;
    for (int i : idx) {
      const int k = wave_number(i, spec.n);
      inside &= std::abs(k) <= kmax && k != -spec.n / 2;
    }
    if (inside) c[flat] = {gauss(rng), gauss(rng)};
  }
  // Hermitian symmetrization: the real part of the synthesis.
  Field f = project_mean_zero(inverse_transform(Spectrum(spec, std::move(c))));
  const double nrm = std::sqrt(sobolev_norm_sq(f));
  return (norm / nrm) * f;
}

/// Newton from n_seeds random low-mode fields; duplicates modulo torus
/// translations are merged.
inline MultiStartReport multi_start(double lambda, const TorusSpec& spec, int n_seeds, std::uint64_t seed,
                                    const MultiStartOptions& opt = {}) {
  if (n_seeds < 1) throw Error(Errc::invalid_argument, "multi_start needs n_seeds >= 1");
  MultiStartReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(opt.norm_min, opt.norm_max);
  for (int i = 0; i < n_seeds; ++i) {
    const double norm = unif(rng);
    rep.seeds.push_back(random_low_mode_field(spec, rng, opt.kmax, norm));
  }
  rep.results.resize(rep.seeds.size());
  parallel_for(rep.seeds.size(), opt.threads,
               [&](std::size_t i) { rep.results[i] = newton_solve(rep.seeds[i], lambda, opt.newton); });
  for (std::size_t i = 0; i < rep.results.size(); ++i) {
    if (!rep.results[i].converged) continue;
    bool fresh = true;
    for (std::size_t j : rep.distinct)
      if (translation_distance(rep.results[j].field, rep.results[i].field) <= opt.dedup_tol) {
        fresh = false;
        break;
      }
    if (fresh) rep.distinct.push_back(i);
  }
  return rep;
}

}  // namespace pmf

#endif
