#ifndef PMF_ERROR_HPP
#define PMF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pmf {

enum class Errc {
  unsupported_order,
  invalid_grid,
  size_overflow,
  length_mismatch,
  non_finite,
  spec_mismatch,
  not_mean_zero,
  invalid_argument,
  exp_overflow,
  under_resolved,
  interval_violation,
  quadrature_failure,
  non_convergence,
  singular_hessian,
  io_error,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::unsupported_order: return "unsupported-order";
    case Errc::invalid_grid: return "invalid-grid";
    case Errc::size_overflow: return "size-overflow";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::non_finite: return "non-finite";
    case Errc::spec_mismatch: return "spec-mismatch";
    case Errc::not_mean_zero: return "not-mean-zero";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::exp_overflow: return "exp-overflow";
    case Errc::under_resolved: return "under-resolution";
    case Errc::interval_violation: return "interval";
    case Errc::quadrature_failure: return "quadrature-failure";
    case Errc::non_convergence: return "non-convergence";
    case Errc::singular_hessian: return "singular-hessian";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure in the library is reported through this type; `code()`
/// lets callers (and the CLI exit-code mapping) branch on the category.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pmf

#endif
