#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pmf/diagnostics.hpp"
#include "pmf/mountain_pass.hpp"
#include "pmf/solver.hpp"
#include "test_support.hpp"

namespace pmf {
namespace {

using test::code_of;
using test::pi;

const SolveResult& saddle14() {
  static const SolveResult s = [] {
    const MPResult mp = mountain_pass(14.0, make_spec(1, 64));
    EXPECT_TRUE(mp.converged);
    return mp.solution;
  }();
  return s;
}

Field density(const Field& u) {
  const double mass = integrate_exp(u, 2.0 * u.spec().m);
  std::vector<double> p(u.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(2.0 * u.spec().m * u[i]) / mass;
  return from_values(u.spec(), p);
}

TEST(Newton, ZeroIsAFixedPoint) {
  const SolveResult r = newton_solve(zero_field(make_spec(1, 32)), 14.0);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.field.max_abs(), 0.0);
}

TEST(Newton, SmallDataConvergeToZeroBelowThreshold) {
  const auto spec = make_spec(1, 32);
  const SolveResult r = newton_solve(test::smooth_field(spec, 3, 2, 0.05), 5.0);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.field.max_abs(), 1e-9);
}

TEST(Newton, MountainPassSaddleAtFourteen) {
  const SolveResult& s = saddle14();
  ASSERT_TRUE(s.converged);
  EXPECT_LE(s.residual_l2, 1e-10);
  EXPECT_GT(s.energy, 0.0);
  EXPECT_LT(s.min_hessian_eig, 0.0);
  EXPECT_GT(sobolev_norm_sq(s.field), 1.0);
}

TEST(Newton, QuadraticConvergenceNearSaddle) {
  const SolveResult& s = saddle14();
  std::mt19937_64 rng(3);
  const Field guess = s.field + random_low_mode_field(s.field.spec(), rng, 2, 0.05);
  const SolveResult r = newton_solve(guess, 14.0);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, s.energy, 1e-9);
  const auto& h = r.residual_history;
  ASSERT_GE(h.size(), 3u);
  int checked = 0;
  for (std::size_t k = 1; k + 1 < h.size(); ++k) {
    if (h[k] > 1e-2 || h[k + 1] < 1e-9) continue;
    const double order = std::log(h[k + 1] / h[k]) / std::log(h[k] / h[k - 1]);
    EXPECT_GE(order, 1.5) << k;
    ++checked;
  }
  EXPECT_GE(checked, 1);
}

TEST(Newton, SingularHessianAtBifurcationValue) {
  const auto spec = make_spec(1, 32);
  const double mu = constants(1).threshold_high;
  EXPECT_LT(std::abs(hessian_eigen_nearest_zero(zero_field(spec), mu)), 1e-6);
  const SolveResult r = newton_solve(test::cos_mode(spec, 1e-4), mu);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.status, SolveStatus::singular_hessian);
}

TEST(Newton, IntegralIdentityAtSolution) {
  const SolveResult& s = saddle14();
  const double lhs = sobolev_norm_sq(s.field);
  const double rhs = 14.0 * l2_inner(density(s.field), s.field);
  EXPECT_NEAR(lhs, rhs, 1e-8 * lhs);
}

TEST(Newton, TranslationInvariance) {
  const SolveResult& s = saddle14();
  // The discrete problem is invariant under grid shifts only.
  const std::vector<int> cells{19, 45};
  const Field moved = shift(s.field, cells);
  EXPECT_LE(l2_norm(el_residual(moved, 14.0)), 1e-9);
  const SolveResult r = newton_solve(moved, 14.0);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, s.energy, 1e-9);
  EXPECT_LE(translation_distance(r.field, s.field), 1e-7);
}

TEST(Newton, RejectsBadInput) {
  const auto spec = make_spec(1, 16);
  const Field shifted = from_values(spec, std::vector<double>(spec.size(), 1.0));
  EXPECT_EQ(code_of([&] { newton_solve(shifted, 1.0); }), Errc::not_mean_zero);
  EXPECT_EQ(code_of([&] { newton_solve(zero_field(spec), -1.0); }), Errc::invalid_argument);
}

TEST(Continuation, UpwardBranchReachesEnd) {
  const Branch b = continuation(saddle14(), 19.0, 0.25);
  EXPECT_EQ(b.reason, BranchEnd::reached_end);
  ASSERT_GE(b.points.size(), 2u);
  EXPECT_NEAR(b.points.back().lambda, 19.0, 1e-12);
  for (std::size_t i = 1; i < b.points.size(); ++i) {
    EXPECT_TRUE(b.points[i].converged);
    EXPECT_GT(b.points[i].lambda, b.points[i - 1].lambda);
    EXPECT_GT(sobolev_norm_sq(b.points[i].field), 1e-2);
    // Saddle energies fall as lambda grows.
    EXPECT_LT(b.points[i].energy, b.points[i - 1].energy);
  }
}

TEST(Continuation, BlowUpGuardAndConcentration) {
  ContinuationOptions opt;
  opt.blowup_cap = 5.0;
  const Branch b = continuation(saddle14(), 4.0, 0.25, opt);
  ASSERT_EQ(b.reason, BranchEnd::blowup_guard);
  EXPECT_GT(b.guard_trigger.field.max_abs(), 5.0);
  EXPECT_LT(b.guard_trigger.lambda, 14.0);
  for (std::size_t i = 1; i < b.points.size(); ++i) EXPECT_LT(b.points[i].lambda, b.points[i - 1].lambda);
  const QuantizationReport q = concentration(b.guard_trigger.field, b.guard_trigger.lambda);
  EXPECT_TRUE(q.has_peak);
  EXPECT_GE(q.nearest_N, 1);
}

TEST(Continuation, RejectsBadInput) {
  EXPECT_EQ(code_of([] { continuation(saddle14(), 19.0, 0.0); }), Errc::invalid_argument);
  SolveResult bad = saddle14();
  bad.converged = false;
  EXPECT_EQ(code_of([&] { continuation(bad, 19.0, 0.25); }), Errc::non_convergence);
}

TEST(MultiStart, OnlyTrivialBelowLambda1) {
  const MultiStartReport rep = multi_start(1.0, make_spec(1, 32), 10, 3);
  ASSERT_EQ(rep.results.size(), 10u);
  for (const SolveResult& r : rep.results) {
    EXPECT_TRUE(r.converged);
    EXPECT_LE(std::sqrt(sobolev_norm_sq(r.field)), 1e-8);
  }
  EXPECT_EQ(rep.distinct.size(), 1u);
}

TEST(MultiStart, FindsNontrivialSolutionAtFourteen) {
  const MultiStartReport rep = multi_start(14.0, make_spec(1, 64), 40, 7);
  int saddles = 0;
  for (std::size_t i : rep.distinct) {
    const SolveResult& r = rep.results[i];
    EXPECT_LE(l2_norm(el_residual(r.field, 14.0)), 1e-9);
    if (sobolev_norm_sq(r.field) > 1e-2 && std::abs(r.energy - saddle14().energy) <= 1e-6 * saddle14().energy) ++saddles;
  }
  EXPECT_GE(rep.distinct.size(), 2u);
  EXPECT_EQ(saddles, 1);
}

TEST(MultiStart, DeterministicAcrossThreadCounts) {
  MultiStartOptions one;
  one.threads = 1;
  MultiStartOptions two;
  two.threads = 2;
  const auto spec = make_spec(1, 32);
  const MultiStartReport a = multi_start(14.0, spec, 6, 11, one);
  const MultiStartReport b = multi_start(14.0, spec, 6, 11, two);
  ASSERT_EQ(a.results.size(), b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_EQ(test::max_abs_diff(a.seeds[i], b.seeds[i]), 0.0);
    EXPECT_EQ(test::max_abs_diff(a.results[i].field, b.results[i].field), 0.0);
  }
  EXPECT_EQ(a.distinct, b.distinct);
  EXPECT_EQ(code_of([&] { multi_start(14.0, spec, 0, 1); }), Errc::invalid_argument);
}

}  // namespace
}  // namespace pmf
