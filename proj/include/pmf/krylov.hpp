#ifndef PMF_KRYLOV_HPP
#define PMF_KRYLOV_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

#include "pmf/field.hpp"

namespace pmf {

using LinearOperator = std::function<Field(const Field&)>;
using InnerProduct = std::function<double(const Field&, const Field&)>;

struct KrylovResult {
  Field x;
  double residual = 0.0;     ///< final residual norm in the supplied inner product
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;    ///< Hessenberg column vanished with the residual still above tol
};

/// Restarted GMRES for A x = b with an arbitrary inner product.
///
/// Stops when ||b - A x|| <= rel_tol ||b||. Every Krylov vector is kept mean-zero by
/// construction of A.
inline KrylovResult gmres(const LinearOperator& A, const Field& b, const InnerProduct& dot,
                          double rel_tol, int max_iter = 200, int restart = 60) {
  KrylovResult out;
  out.x = zero_field(b.spec());
  const double bnorm = std::sqrt(std::max(0.0, dot(b, b)));
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  const double target = rel_tol * bnorm;
  Field r = b;
  double beta = bnorm;
  while (out.iterations < max_iter) {
    std::vector<Field> V{(1.0 / beta) * r};
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
    std::vector<double> cs, sn;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(restart + 1);
    g(0) = beta;
    int cols = 0;
    bool invariant = false;
    for (int k = 0; k < restart && out.iterations < max_iter; ++k) {
      Field w = A(V[static_cast<std::size_t>(k)]);
      // Modified Gram-Schmidt, applied twice for robustness near singular operators.
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= k; ++i) {
          const double c = dot(w, V[static_cast<std::size_t>(i)]);
          H(i, k) += c;
          w = axpby(1.0, w, -c, V[static_cast<std::size_t>(i)]);
        }
      const double sub = std::sqrt(std::max(0.0, dot(w, w)));
      H(k + 1, k) = sub;
      for (int i = 0; i < k; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const double t = cs[iu] * H(i, k) + sn[iu] * H(i + 1, k);
        H(i + 1, k) = -sn[iu] * H(i, k) + cs[iu] * H(i + 1, k);
        H(i, k) = t;
      }
      const double d = std::hypot(H(k, k), H(k + 1, k));
      ++out.iterations;
      if (d <= 1e-14 * bnorm) {
        out.breakdown = true;
        break;
      }
      cs.push_back(H(k, k) / d);
      sn.push_back(H(k + 1, k) / d);
      H(k, k) = d;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn.back() * g(k);
      g(k) = cs.back() * g(k);
      cols = k + 1;
      if (std::abs(g(k + 1)) <= target) break;
      if (sub <= 1e-14 * bnorm) {
        invariant = true;
        break;
      }
      V.push_back((1.0 / sub) * w);
    }
    if (cols > 0) {
      const Eigen::VectorXd y =
          H.topLeftCorner(cols, cols).triangularView<Eigen::Upper>().solve(g.head(cols));
      for (int i = 0; i < cols; ++i) out.x = axpby(1.0, out.x, y(i), V[static_cast<std::size_t>(i)]);
    }
    r = b - A(out.x);
    beta = std::sqrt(std::max(0.0, dot(r, r)));
    out.residual = beta;
    if (beta <= target) {
      out.converged = true;
      out.breakdown = false;
      return out;
    }
    if (invariant) out.breakdown = true;
    if (out.breakdown) return out;
  }
  return out;
}

/// Ritz values (ascending) of a self-adjoint operator after `steps` Lanczos
/// iterations with full reorthogonalization. A non-empty `constrain` is
/// applied to every new Lanczos vector, keeping the iteration inside an
/// invariant subspace that rounding would otherwise leak out of.
inline std::vector<double> lanczos_ritz_values(const LinearOperator& A, const Field& start,
                                               const InnerProduct& dot, int steps = 30,
                                               const LinearOperator& constrain = {}) {
  std::vector<double> alpha, beta;
  std::vector<Field> basis{(1.0 / std::sqrt(dot(start, start))) * start};
  for (int j = 0; j < steps; ++j) {
    Field w = A(basis.back());
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < basis.size(); ++i) {
        const double c = dot(w, basis[i]);
        if (pass == 0 && i + 1 == basis.size()) alpha.push_back(c);
        w = axpby(1.0, w, -c, basis[i]);
      }
    if (j + 1 == steps) break;
    if (constrain) w = constrain(w);
    const double b = std::sqrt(std::max(0.0, dot(w, w)));
    if (b <= 1e-12 * std::abs(alpha.back()) + 1e-300) break;
    beta.push_back(b);
    basis.push_back((1.0 / b) * w);
  }
  const int k = static_cast<int>(alpha.size());
  Eigen::VectorXd diag(k), sub(std::max(0, k - 1));
  for (int i = 0; i < k; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < k; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + k);
}

}  // namespace pmf

#endif
