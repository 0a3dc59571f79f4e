#ifndef PMF_FIELD_HPP
#define PMF_FIELD_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmf/error.hpp"
#include "pmf/fft.hpp"

namespace pmf {

/// Uniform periodic grid on the unit-volume flat torus of dimension 2m.
struct TorusSpec {
  int m = 1;
  int n = 8;

  int dim() const { return 2 * m; }

  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim(); ++i) s *= static_cast<std::size_t>(n);
    return s;
  }

  double spacing() const { return 1.0 / n; }

  friend bool operator==(const TorusSpec&, const TorusSpec&) = default;
};

inline TorusSpec make_spec(int m, int n) {
  if (m != 1 && m != 2)
    throw Error(Errc::unsupported_order, "m must be 1 or 2, got " + std::to_string(m));
  if (n < 8 || n % 2 != 0)
    throw Error(Errc::invalid_grid, "n must be even and >= 8, got " + std::to_string(n));
  // The flat grid index, and the complex spectrum (16 bytes per entry), must
  // both stay addressable.
  const double total = std::pow(static_cast<double>(n), 2.0 * m);
  if (total > static_cast<double>(std::numeric_limits<std::ptrdiff_t>::max() / 16))
    throw Error(Errc::size_overflow, "n^(2m) is not representable");
  return TorusSpec{m, n};
}

inline void require_same_spec(const TorusSpec& a, const TorusSpec& b) {
  if (!(a == b))
    throw Error(Errc::spec_mismatch, "fields live on different grids (m=" + std::to_string(a.m) +
                                         ",n=" + std::to_string(a.n) + " vs m=" +
                                         std::to_string(b.m) + ",n=" + std::to_string(b.n) + ")");
}

/// Signed wave number of FFT index i: {0..n/2-1} then {-n/2..-1}.
inline int wave_number(int i, int n) { return i < n / 2 ? i : i - n; }

/// |k|^2 for every flat index of the grid, row-major with axis 0 slowest.
inline std::vector<double> wave_norm_sq(const TorusSpec& spec) {
  const std::size_t total = spec.size();
  const int d = spec.dim();
  std::vector<double> out(total);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const int k = wave_number(idx[static_cast<std::size_t>(a)], spec.n);
      s += static_cast<double>(k) * k;
    }
    out[flat] = s;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.n) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return out;
}

/// Multi-index of a flat grid index.
inline std::vector<int> unflatten(const TorusSpec& spec, std::size_t flat) {
  std::vector<int> idx(static_cast<std::size_t>(spec.dim()));
  for (int a = spec.dim() - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(spec.n));
    flat /= static_cast<std::size_t>(spec.n);
  }
  return idx;
}

inline std::size_t flatten(const TorusSpec& spec, std::span<const int> idx) {
  std::size_t flat = 0;
  for (int a = 0; a < spec.dim(); ++a) {
    int i = idx[static_cast<std::size_t>(a)] % spec.n;
    if (i < 0) i += spec.n;
    flat = flat * static_cast<std::size_t>(spec.n) + static_cast<std::size_t>(i);
  }
  return flat;
}

/// Real function sampled on the grid. Immutable once built.
class Field {
 public:
  Field() = default;

  /// No validation; for values produced by library operations.
  static Field unchecked(TorusSpec spec, std::vector<double> values, bool mean_zero) {
    Field f;
    f.spec_ = spec;
    f.values_ = std::move(values);
    f.mean_zero_ = mean_zero;
    return f;
  }

  const TorusSpec& spec() const { return spec_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  bool mean_zero() const { return mean_zero_; }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max_abs() const {
    double s = 0.0;
    for (double v : values_) s = std::max(s, std::abs(v));
    return s;
  }
  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) -
                                    values_.begin());
  }

 private:
  TorusSpec spec_{};
  std::vector<double> values_;
  bool mean_zero_ = false;
};

/// Fourier coefficients c(k) with f(x) = sum_k c(k) exp(2 pi i k.x).
class Spectrum {
 public:
  Spectrum(TorusSpec spec, std::vector<std::complex<double>> coeffs)
      : spec_(spec), coeffs_(std::move(coeffs)) {}

  const TorusSpec& spec() const { return spec_; }
  std::span<const std::complex<double>> coefficients() const { return coeffs_; }
  std::vector<std::complex<double>>& mutable_coefficients() { return coeffs_; }
  std::complex<double> operator[](std::size_t i) const { return coeffs_[i]; }

  /// Coefficient of the signed wave vector k.
  std::complex<double> at(std::span<const int> k) const { return coeffs_[flatten(spec_, k)]; }

 private:
  TorusSpec spec_;
  std::vector<std::complex<double>> coeffs_;
};

inline Field from_values(const TorusSpec& spec, std::vector<double> values) {
  if (values.size() != spec.size())
    throw Error(Errc::length_mismatch, "expected " + std::to_string(spec.size()) +
                                           " values, got " + std::to_string(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw Error(Errc::non_finite, "entry " + std::to_string(i) + " is not finite");
  return Field::unchecked(spec, std::move(values), false);
}

inline Field zero_field(const TorusSpec& spec) {
  return Field::unchecked(spec, std::vector<double>(spec.size(), 0.0), true);
}

/// Samples fn(x) at the grid points x = idx/n.
template <class Fn>
Field sample(const TorusSpec& spec, Fn&& fn) {
  const std::size_t total = spec.size();
  const int d = spec.dim();
  std::vector<double> values(total);
  std::vector<double> x(static_cast<std::size_t>(d), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (int a = 0; a < d; ++a)
      x[static_cast<std::size_t>(a)] = idx[static_cast<std::size_t>(a)] * spec.spacing();
    values[flat] = fn(std::span<const double>(x));
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.n) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return from_values(spec, std::move(values));
}

/// Periodic trapezoidal rule, i.e. the grid average.
inline double integrate(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

inline double l2_inner(const Field& f, const Field& g) {
  require_same_spec(f.spec(), g.spec());
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s / static_cast<double>(f.size());
}

inline double l2_norm(const Field& f) { return std::sqrt(l2_inner(f, f)); }

inline bool is_mean_zero(const Field& f) {
  if (f.mean_zero()) return true;
  return std::abs(integrate(f)) <= 1e-12 * (1.0 + f.max_abs());
}

inline void require_mean_zero(const Field& f, const char* who) {
  if (!is_mean_zero(f))
    throw Error(Errc::not_mean_zero, std::string(who) + " requires a mean-zero field (mean=" +
                                         std::to_string(integrate(f)) + ")");
}

inline Field project_mean_zero(const Field& f) {
  const double mean = integrate(f);
  std::vector<double> v(f.data());
  for (double& x : v) x -= mean;
  return Field::unchecked(f.spec(), std::move(v), true);
}

// Linear algebra on fields. Mean-zero status is preserved when both inputs
// carry it.
inline Field axpby(double a, const Field& x, double b, const Field& y) {
  require_same_spec(x.spec(), y.spec());
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * x[i] + b * y[i];
  return Field::unchecked(x.spec(), std::move(v), x.mean_zero() && y.mean_zero());
}

inline Field operator+(const Field& x, const Field& y) { return axpby(1.0, x, 1.0, y); }
inline Field operator-(const Field& x, const Field& y) { return axpby(1.0, x, -1.0, y); }
inline Field operator*(double a, const Field& x) {
  std::vector<double> v(x.data());
  for (double& e : v) e *= a;
  return Field::unchecked(x.spec(), std::move(v), x.mean_zero());
}

inline Spectrum transform(const Field& f) {
  std::vector<std::complex<double>> in(f.values().begin(), f.values().end());
  std::vector<std::complex<double>> out;
  detail::dft(f.spec().dim(), f.spec().n, FFTW_FORWARD, in, out);
  const double scale = 1.0 / static_cast<double>(f.size());
  for (auto& c : out) c *= scale;
  return Spectrum(f.spec(), std::move(out));
}

/// Real part of the synthesis; the imaginary part vanishes for Hermitian input.
inline Field inverse_transform(const Spectrum& s, bool mean_zero = false) {
  std::vector<std::complex<double>> out;
  detail::dft(s.spec().dim(), s.spec().n, FFTW_BACKWARD,
              std::vector<std::complex<double>>(s.coefficients().begin(), s.coefficients().end()),
              out);
  std::vector<double> v(out.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = out[i].real();
  return Field::unchecked(s.spec(), std::move(v), mean_zero);
}

inline double laplacian_eigenvalue(double k2) {
  return 4.0 * std::numbers::pi * std::numbers::pi * k2;
}

/// Applies the Fourier multiplier mult(|k|^2) with the zero mode removed.
template <class Mult>
Field apply_multiplier(const Field& f, Mult&& mult) {
  Spectrum s = transform(f);
  const auto k2 = wave_norm_sq(f.spec());
  auto& c = s.mutable_coefficients();
  c[0] = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) c[i] *= mult(k2[i]);
  return inverse_transform(s, true);
}

/// (-Delta)^s on mean-zero fields; multiplier (4 pi^2 |k|^2)^s.
inline Field apply_power_laplacian(const Field& f, double s) {
  if (!(s >= 0.0)) throw Error(Errc::invalid_argument, "power must be >= 0 (use solve_poisson_power)");
  require_mean_zero(f, "apply_power_laplacian");
  return apply_multiplier(f, [s](double k2) { return std::pow(laplacian_eigenvalue(k2), s); });
}

/// Inverse of (-Delta)^s on the mean-zero subspace.
inline Field solve_poisson_power(const Field& f, double s) {
  if (!(s > 0.0)) throw Error(Errc::invalid_argument, "power must be > 0");
  require_mean_zero(f, "solve_poisson_power");
  return apply_multiplier(f, [s](double k2) { return std::pow(laplacian_eigenvalue(k2), -s); });
}

/// ⟨f, g⟩ in the norm ||Delta^{m/2} u||, evaluated on the multiplier side.
inline double sobolev_inner(const Field& f, const Field& g) {
  require_same_spec(f.spec(), g.spec());
  require_mean_zero(f, "sobolev_inner");
  require_mean_zero(g, "sobolev_inner");
  const Spectrum a = transform(f);
  const Spectrum b = &f == &g ? a : transform(g);
  const auto k2 = wave_norm_sq(f.spec());
  const double m = f.spec().m;
  double sum = 0.0;
  for (std::size_t i = 1; i < k2.size(); ++i)
    sum += std::pow(laplacian_eigenvalue(k2[i]), m) * (a[i] * std::conj(b[i])).real();
  return sum;
}

inline double sobolev_norm_sq(const Field& f) { return sobolev_inner(f, f); }

/// Grid mean of exp(c f). Fails instead of returning inf.
inline double integrate_exp(const Field& f, double c) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : f.values()) top = std::max(top, c * v);
  if (top > std::log(std::numeric_limits<double>::max()) - 1.0)
    throw Error(Errc::exp_overflow, "exp overflows at max exponent " + std::to_string(top));
  double s = 0.0;
  for (double v : f.values()) s += std::exp(c * v);
  return s / static_cast<double>(f.size());
}

/// log of the grid mean of exp(c f), by max subtraction.
inline double log_integrate_exp(const Field& f, double c) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : f.values()) top = std::max(top, c * v);
  double s = 0.0;
  for (double v : f.values()) s += std::exp(c * v - top);
  return top + std::log(s / static_cast<double>(f.size()));
}

/// Normalized density exp(c f) / mean(exp(c f)); overflow-safe.
inline Field exp_density(const Field& f, double c) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : f.values()) top = std::max(top, c * v);
  std::vector<double> p(f.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(c * f[i] - top);
    s += p[i];
  }
  const double inv_mean = static_cast<double>(p.size()) / s;
  for (double& v : p) v *= inv_mean;
  return Field::unchecked(f.spec(), std::move(p), false);
}

/// Circular shift by whole grid cells: out(x) = f(x - shift).
inline Field shift(const Field& f, std::span<const int> offsets) {
  const auto& spec = f.spec();
  std::vector<double> v(f.size());
  std::vector<int> idx(static_cast<std::size_t>(spec.dim()), 0);
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    idx = unflatten(spec, flat);
    for (int a = 0; a < spec.dim(); ++a)
      idx[static_cast<std::size_t>(a)] += offsets[static_cast<std::size_t>(a)];
    v[flatten(spec, idx)] = f[flat];
  }
  return Field::unchecked(spec, std::move(v), f.mean_zero());
}

/// Continuous translation out(x) = f(x - tau) by a Fourier phase shift.
/// Taking the real part of the synthesis symmetrizes the unpaired Nyquist modes.
inline Field translate(const Field& f, std::span<const double> tau) {
  const auto& spec = f.spec();
  Spectrum s = transform(f);
  auto& c = s.mutable_coefficients();
  for (std::size_t flat = 0; flat < c.size(); ++flat) {
    const auto idx = unflatten(spec, flat);
    double phase = 0.0;
    for (int a = 0; a < spec.dim(); ++a)
      phase -= 2.0 * std::numbers::pi * wave_number(idx[static_cast<std::size_t>(a)], spec.n) *
               tau[static_cast<std::size_t>(a)];
    c[flat] *= std::polar(1.0, phase);
  }
  return inverse_transform(s, f.mean_zero());
}

inline std::vector<double> grid_point(const TorusSpec& spec, std::size_t flat) {
  const auto idx = unflatten(spec, flat);
  std::vector<double> x(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) x[a] = idx[a] * spec.spacing();
  return x;
}

/// Translation tau for which translate(b, tau) best matches a in L^2.
///
/// The correlation is evaluated at every grid shift by one FFT, and the best
/// grid shift is refined by Newton steps on the trigonometric polynomial.
inline std::vector<double> best_translation(const Field& a, const Field& b) {
  require_same_spec(a.spec(), b.spec());
  const auto& spec = a.spec();
  const int d = spec.dim();
  const Spectrum ca = transform(a);
  const Spectrum cb = transform(b);
  std::vector<std::complex<double>> prod(ca.coefficients().size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = ca[i] * std::conj(cb[i]);
  const Field corr = inverse_transform(Spectrum(spec, prod));
  std::vector<double> tau = grid_point(spec, corr.argmax());
  std::vector<std::vector<int>> waves(prod.size());
  for (std::size_t i = 0; i < prod.size(); ++i) {
    waves[i] = unflatten(spec, i);
    for (int& k : waves[i]) k = wave_number(k, spec.n);
  }
  for (int it = 0; it < 8; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < prod.size(); ++i) {
      Eigen::VectorXd k(d);
      double ph = 0.0;
      for (int x = 0; x < d; ++x) {
        k(x) = 2.0 * std::numbers::pi * waves[i][static_cast<std::size_t>(x)];
        ph += k(x) * tau[static_cast<std::size_t>(x)];
      }
      const std::complex<double> t = prod[i] * std::polar(1.0, ph);
      grad -= t.imag() * k;
      hess -= t.real() * k * k.transpose();
    }
    const Eigen::VectorXd step = hess.fullPivLu().solve(-grad);
    if (!step.allFinite()) break;
    const double len = step.cwiseAbs().maxCoeff();
    // Stay within the basin of the grid maximum.
    if (len > spec.spacing()) break;
    for (int x = 0; x < d; ++x) tau[static_cast<std::size_t>(x)] += step(x);
    if (len < 1e-14) break;
  }
  for (double& t : tau) t -= std::floor(t);
  return tau;
}

/// L^2 distance between a and the best translate of b.
inline double translation_distance(const Field& a, const Field& b) {
  const std::vector<double> tau = best_translation(a, b);
  const Field bt = translate(b, tau);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - bt[i]) * (a[i] - bt[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

/// Spectral partial derivative along `axis`; the Nyquist mode is dropped.
inline Field partial_derivative(const Field& f, int axis) {
  const auto& spec = f.spec();
  Spectrum s = transform(f);
  auto& c = s.mutable_coefficients();
  for (std::size_t flat = 0; flat < c.size(); ++flat) {
    const int k = wave_number(unflatten(spec, flat)[static_cast<std::size_t>(axis)], spec.n);
    if (k == -spec.n / 2)
      c[flat] = 0.0;
    else
      c[flat] *= std::complex<double>(0.0, 2.0 * std::numbers::pi * k);
  }
  return inverse_transform(s, true);
}

/// Distance on the unit torus between two points given in [0,1) coordinates.
inline double torus_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    double d = x[a] - y[a];
    d -= std::round(d);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace pmf

#endif
