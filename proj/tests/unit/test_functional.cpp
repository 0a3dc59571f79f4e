#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pmf/bubble.hpp"
#include "pmf/functional.hpp"
#include "test_support.hpp"

namespace pmf {
namespace {

using test::code_of;
using test::pi;

TEST(Constants, ClosedFormsForBothOrders) {
  const Constants c1 = constants(1);
  EXPECT_NEAR(c1.Lambda1, 4 * pi, 1e-12);
  EXPECT_NEAR(c1.lambda1, 4 * pi * pi, 1e-12);
  EXPECT_NEAR(c1.threshold_high, 2 * pi * pi, 1e-12);
  EXPECT_NEAR(c1.Lambda1, 12.566371, 1e-6);
  EXPECT_NEAR(c1.threshold_high, 19.739209, 1e-6);
  const Constants c2 = constants(2);
  // 3! * vol(S^4) with vol(S^4) = 8 pi^2 / 3
  EXPECT_NEAR(c2.Lambda1, 6.0 * 8 * pi * pi / 3, 1e-11);
  EXPECT_NEAR(c2.Lambda1, 157.9137, 1e-4);
  EXPECT_NEAR(c2.threshold_high, 4 * std::pow(pi, 4), 1e-10);
  EXPECT_NEAR(c2.threshold_high, 389.6363, 1e-4);
  for (const Constants& c : {c1, c2}) {
    EXPECT_LT(c.threshold_low, c.threshold_high);
    EXPECT_NEAR(c.poincare_Cm, 1.0 / c.lambda1, 1e-15);
  }
  EXPECT_EQ(code_of([] { constants(3); }), Errc::unsupported_order);
}

TEST(Constants, SmallestEigenvalueMatchesFourierSpectrum) {
  for (auto spec : {make_spec(1, 16), make_spec(2, 8)}) {
    const Field mode = test::cos_mode(spec);
    EXPECT_NEAR(sobolev_norm_sq(mode) / l2_inner(mode, mode), constants(spec.m).lambda1,
                1e-9 * constants(spec.m).lambda1);
  }
}

TEST(Energy, ZeroAndPureQuadratic) {
  const auto spec = make_spec(1, 64);
  for (double l : {0.0, 5.0, 14.0}) EXPECT_EQ(energy(zero_field(spec), l).energy, 0.0);
  const EnergyReport r = energy(test::cos_mode(spec), 0.0);
  EXPECT_NEAR(r.energy, pi * pi, 1e-11);
  EXPECT_NEAR(r.dirichlet, pi * pi, 1e-11);
  const Field shifted = from_values(spec, std::vector<double>(spec.size(), 1.0));
  EXPECT_EQ(code_of([&] { energy(shifted, 1.0); }), Errc::not_mean_zero);
}

TEST(Energy, ReportIsConsistentAndJensenHolds) {
  const auto spec = make_spec(1, 64);
  for (unsigned s = 0; s < 5; ++s) {
    const Field u = test::smooth_field(spec, s);
    const EnergyReport r = energy(u, 9.0);
    EXPECT_DOUBLE_EQ(r.energy, r.dirichlet - 9.0 / 2.0 * r.log_mass);
    EXPECT_GE(r.log_mass, 0.0);
    EXPECT_NEAR(r.log_mass, std::log(integrate_exp(u, 2.0)), 1e-13);
  }
}

TEST(Energy, OverflowSafeLogMass) {
  const auto spec = make_spec(1, 32);
  const Field u = test::cos_mode(spec, 500.0);
  const EnergyReport r = energy(u, 1.0);
  EXPECT_TRUE(std::isfinite(r.log_mass));
  EXPECT_NEAR(r.log_mass, 1000.0, 10.0);
}

TEST(Energy, LowerBoundBelowLambda1OnBubbles) {
  // I >= (1/2 - lambda/(2 Lambda_1)) ||u||^2 - C, C fitted on some bubbles
  // and checked with 10% slack on others.
  const auto spec = make_spec(1, 512);
  const double lambda = 10.0;
  const double coef = 0.5 - lambda / (2 * constants(1).Lambda1);
  auto gap = [&](double sigma) {
    const Field u = bubble_field(spec, {sigma, 0.4, {}});
    return coef * sobolev_norm_sq(u) - energy(u, lambda).energy;
  };
  double c = -1e300;
  for (double sigma : {3.0, 6.0, 12.0, 24.0}) c = std::max(c, gap(sigma));
  ASSERT_TRUE(std::isfinite(c));
  for (double sigma : {4.0, 8.0, 16.0, 32.0}) EXPECT_LE(gap(sigma), c + 0.1 * std::abs(c)) << sigma;
}

TEST(Residual, ZeroAndLinearPart) {
  const auto spec = make_spec(1, 64);
  EXPECT_LE(l2_norm(el_residual(zero_field(spec), 7.0)), 1e-15);
  const Field c = test::cos_mode(spec);
  EXPECT_LE(test::max_abs_diff(el_residual(c, 0.0), (4 * pi * pi) * c), 1e-10);
  const Field r = el_residual(test::smooth_field(spec, 2), 14.0);
  EXPECT_TRUE(r.mean_zero());
  EXPECT_LE(std::abs(integrate(r)), 1e-13);
}

class GradientCheck : public ::testing::TestWithParam<double> {};

TEST_P(GradientCheck, CentralDifferenceOfEnergy) {
  const double lambda = GetParam();
  const auto spec = make_spec(1, 64);
  const double h = 1e-5;
  for (unsigned s = 0; s < 20; ++s) {
    const Field u = test::smooth_field(spec, 100 + s);
    const Field v = test::smooth_field(spec, 200 + s);
    const double exact = sobolev_inner(gradient_h(u, lambda), v);
    const double fd = (energy(axpby(1, u, h, v), lambda).energy - energy(axpby(1, u, -h, v), lambda).energy) / (2 * h);
    EXPECT_LE(std::abs(exact - fd), 1e-6 * std::max(1.0, std::abs(exact))) << "seed " << s;
  }
}

INSTANTIATE_TEST_SUITE_P(Lambdas, GradientCheck, ::testing::Values(0.0, 5.0, 14.0));

TEST(Gradient, ZeroIsCriticalAndBubbleIsNot) {
  const auto spec = make_spec(1, 256);
  EXPECT_LE(gradient_norm(zero_field(spec), 14.0), 1e-15);
  EXPECT_GT(gradient_norm(bubble_field(spec, {16.0, 0.4, {}}), 14.0), 1e-2);
}

TEST(Hessian, ActionAtZero) {
  const auto spec = make_spec(1, 64);
  const Field v = test::smooth_field(spec, 4);
  const double lambda = 11.0;
  const Field expect = axpby(1.0, apply_power_laplacian(v, 1), -2.0 * lambda, v);
  EXPECT_LE(test::max_abs_diff(hessian_action(zero_field(spec), lambda, v), expect), 1e-9);
  // Quadratic form at the bifurcation value on the first mode: 2 pi^2 - 2 (2 pi^2)(1/2).
  EXPECT_NEAR(second_variation_at_zero(test::cos_mode(spec), 2 * pi * pi), 0.0, 1e-10);
}

TEST(Hessian, Symmetric) {
  const auto spec = make_spec(1, 64);
  for (unsigned s = 0; s < 10; ++s) {
    const Field u = test::smooth_field(spec, s);
    const Field v = test::smooth_field(spec, 50 + s);
    const Field w = test::smooth_field(spec, 90 + s);
    const double a = l2_inner(hessian_action(u, 14.0, v), w);
    const double b = l2_inner(hessian_action(u, 14.0, w), v);
    EXPECT_LE(std::abs(a - b), 1e-9 * std::max(std::abs(a), 1.0));
  }
}

TEST(Hessian, FiniteDifferenceOfGradient) {
  const auto spec = make_spec(1, 64);
  const double h = 1e-5, lambda = 14.0;
  for (unsigned s = 0; s < 20; ++s) {
    const Field u = test::smooth_field(spec, 300 + s);
    const Field v = test::smooth_field(spec, 400 + s);
    // Riesz map: the H^m representative of the Hessian action is (-Delta)^{-m} of it.
    const Field exact = solve_poisson_power(hessian_action(u, lambda, v), 1);
    const Field fd = (0.5 / h) * (gradient_h(axpby(1, u, h, v), lambda) - gradient_h(axpby(1, u, -h, v), lambda));
    const double scale = std::sqrt(sobolev_norm_sq(exact));
    EXPECT_LE(std::sqrt(sobolev_norm_sq(fd - exact)), 1e-5 * scale) << "seed " << s;
  }
}

TEST(SecondVariation, ThresholdSignChange) {
  const auto spec = make_spec(1, 32);
  const double t = constants(1).threshold_high;
  EXPECT_GT(min_second_variation_at_zero(spec, 0.99 * t), 0.0);
  EXPECT_LT(min_second_variation_at_zero(spec, 1.01 * t), 0.0);
  EXPECT_NEAR(min_second_variation_at_zero(spec, t), 0.0, 1e-10);
}

TEST(ExpansionGap, ZeroCasesAndNonNegativity) {
  const auto spec = make_spec(1, 64);
  const Field u = test::smooth_field(spec, 1);
  EXPECT_EQ(expansion_gap(u, zero_field(spec), 14.0), 0.0);
  EXPECT_EQ(expansion_gap(u, test::smooth_field(spec, 2), 0.0), 0.0);
  for (unsigned s = 0; s < 100; ++s) {
    const Field a = test::smooth_field(spec, 1000 + s, 3, 0.5);
    const Field b = test::smooth_field(spec, 2000 + s, 3, 0.5);
    EXPECT_GE(expansion_gap(a, b, 14.0), -1e-10 * (1.0 + std::abs(energy(a, 14.0).energy)));
  }
}

TEST(ExpansionGap, MatchesDefinition) {
  const auto spec = make_spec(1, 64);
  const Field u = test::smooth_field(spec, 7);
  const Field v = test::smooth_field(spec, 8);
  const double mu = 14.0;
  const double rhs = energy(u, mu).energy + sobolev_inner(gradient_h(u, mu), v) + 0.5 * sobolev_norm_sq(v);
  EXPECT_NEAR(expansion_gap(u, v, mu), rhs - energy(u + v, mu).energy, 1e-10);
}

TEST(DualLipschitz, ZeroFiniteAndGuard) {
  const auto spec = make_spec(1, 64);
  EXPECT_LE(dual_lipschitz_gap(zero_field(spec), 14.0, 14.01), 1e-14);
  const Field u = test::smooth_field(spec, 3);
  const double nsq = sobolev_norm_sq(u);
  const Field u4 = std::sqrt(4.0 / nsq) * u;
  const double r1 = dual_lipschitz_gap(u4, 14.0, 14.01);
  const double r2 = dual_lipschitz_gap(u4, 14.0, 14.0001);
  EXPECT_TRUE(std::isfinite(r1));
  EXPECT_GT(r1, 0.0);
  // The gradient is affine in mu, so the ratio does not depend on nu.
  EXPECT_NEAR(r1, r2, 1e-6 * r1);
  const std::vector<Field> fam{u4, 2.0 * u4};
  EXPECT_GE(empirical_dual_lipschitz(fam, 14.0, 14.01), r1);
  EXPECT_EQ(code_of([&] { dual_lipschitz_gap(u, 3.0, 3.0); }), Errc::invalid_argument);
}

}  // namespace
}  // namespace pmf
