#ifndef PMF_JET_HPP
#define PMF_JET_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace pmf {

/// Truncated Taylor polynomial of order N about a point: c[k] = f^(k)/k!.
///
/// Arithmetic on jets is exact up to rounding, so derivatives of composite
/// expressions (products, quotients, exp, log) come out of the product and
/// chain rules rather than finite differences.
template <std::size_t N>
struct Jet {
  std::array<double, N + 1> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }

  /// The independent variable evaluated at x.
  static Jet variable(double x) {
    Jet j;
    j.c[0] = x;
    if constexpr (N >= 1) j.c[1] = 1.0;
    return j;
  }

  double value() const { return c[0]; }

  /// k-th derivative at the expansion point.
  double derivative(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return c[k] * f;
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t k = 0; k <= N; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t k = 0; k <= N; ++k) c[k] -= o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

template <std::size_t N>
Jet<N> operator+(Jet<N> a, const Jet<N>& b) { return a += b; }
template <std::size_t N>
Jet<N> operator-(Jet<N> a, const Jet<N>& b) { return a -= b; }
template <std::size_t N>
Jet<N> operator-(Jet<N> a) { return a *= -1.0; }
template <std::size_t N>
Jet<N> operator*(Jet<N> a, double s) { return a *= s; }
template <std::size_t N>
Jet<N> operator*(double s, Jet<N> a) { return a *= s; }
template <std::size_t N>
Jet<N> operator+(Jet<N> a, double s) { a.c[0] += s; return a; }
template <std::size_t N>
Jet<N> operator+(double s, Jet<N> a) { a.c[0] += s; return a; }
template <std::size_t N>
Jet<N> operator-(Jet<N> a, double s) { a.c[0] -= s; return a; }
template <std::size_t N>
Jet<N> operator-(double s, const Jet<N>& a) { return (-a) + s; }

template <std::size_t N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  for (std::size_t k = 0; k <= N; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j <= k; ++j) s += a.c[j] * b.c[k - j];
    r.c[k] = s;
  }
  return r;
}

template <std::size_t N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  for (std::size_t k = 0; k <= N; ++k) {
    double s = a.c[k];
    for (std::size_t j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}

template <std::size_t N>
Jet<N> operator/(double s, const Jet<N>& b) { return Jet<N>::constant(s) / b; }
template <std::size_t N>
Jet<N> operator/(Jet<N> a, double s) { return a *= 1.0 / s; }

template <std::size_t N>
Jet<N> exp(const Jet<N>& a) {
  Jet<N> r;
  r.c[0] = std::exp(a.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * a.c[j] * r.c[k - j];
    r.c[k] = s / static_cast<double>(k);
  }
  return r;
}

template <std::size_t N>
Jet<N> log(const Jet<N>& a) {
  Jet<N> r;
  r.c[0] = std::log(a.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    double s = a.c[k];
    for (std::size_t j = 1; j < k; ++j)
      s -= static_cast<double>(j) / static_cast<double>(k) * r.c[j] * a.c[k - j];
    r.c[k] = s / a.c[0];
  }
  return r;
}

/// Jet of f' from the jet of f (one order is lost).
template <std::size_t N>
Jet<N - 1> differentiate(const Jet<N>& a) {
  static_assert(N >= 1);
  Jet<N - 1> r;
  for (std::size_t k = 0; k < N; ++k) r.c[k] = static_cast<double>(k + 1) * a.c[k + 1];
  return r;
}

/// Drops the highest-order coefficients.
template <std::size_t M, std::size_t N>
Jet<M> truncate(const Jet<N>& a) {
  static_assert(M <= N);
  Jet<M> r;
  for (std::size_t k = 0; k <= M; ++k) r.c[k] = a.c[k];
  return r;
}

/// Radial Laplacian f'' + (d-1)/r f' in dimension d, as a jet about r.
template <std::size_t N>
Jet<N - 2> radial_laplacian(const Jet<N>& f, double r, int d) {
  static_assert(N >= 2);
  const auto d1 = differentiate(f);
  const auto d2 = differentiate(d1);
  const auto inv_r = 1.0 / Jet<N - 2>::variable(r);
  return d2 + static_cast<double>(d - 1) * (inv_r * truncate<N - 2>(d1));
}

}  // namespace pmf

#endif
