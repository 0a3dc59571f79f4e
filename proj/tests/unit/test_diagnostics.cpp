#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pmf/diagnostics.hpp"
#include "pmf/mountain_pass.hpp"
#include "test_support.hpp"

namespace pmf {
namespace {

using test::code_of;
using test::pi;

TEST(Concentration, FlatFieldHasNoPeak) {
  const auto spec = make_spec(1, 64);
  const double lambda = 3.0;
  const QuantizationReport q = concentration(zero_field(spec), lambda);
  EXPECT_FALSE(q.has_peak);
  EXPECT_EQ(q.nearest_N, 0);
  ASSERT_FALSE(q.mass.empty());
  EXPECT_EQ(q.mass.back(), lambda);
  for (std::size_t i = 1; i < q.mass.size(); ++i) EXPECT_GE(q.mass[i], q.mass[i - 1]);
  // Uniform density: mass(r) = lambda * pi r^2 while the ball fits in the torus.
  const auto it = std::lower_bound(q.radii.begin(), q.radii.end(), 0.25);
  ASSERT_NE(it, q.radii.end());
  const double r = *it;
  const double exact = lambda * pi * r * r;
  EXPECT_NEAR(q.mass[static_cast<std::size_t>(it - q.radii.begin())], exact, 0.03 * exact);
}

TEST(Concentration, SharpBubbleCarriesLambda1) {
  const auto spec = make_spec(1, 1024);
  const double sigma = 60.0;
  const Field u = bubble_field(spec, {sigma, 0.4, {}});
  const double l1 = constants(1).Lambda1;
  const QuantizationReport q = concentration(u, l1);
  EXPECT_TRUE(q.has_peak);
  EXPECT_NEAR(q.plateau_mass, l1, 0.2 * l1);
  EXPECT_EQ(q.nearest_N, 1);
  EXPECT_NEAR(q.deviation, std::abs(q.plateau_mass - l1) / l1, 1e-15);
  EXPECT_EQ(q.mass.back(), l1);
  for (std::size_t i = 1; i < q.mass.size(); ++i) EXPECT_GE(q.mass[i], q.mass[i - 1]);
}

TEST(Concentration, Guards) {
  const auto spec = make_spec(1, 16);
  EXPECT_EQ(code_of([&] { concentration(zero_field(spec), 0.0); }), Errc::invalid_argument);
  const Field shifted = from_values(spec, std::vector<double>(spec.size(), 1.0));
  EXPECT_EQ(code_of([&] { concentration(shifted, 1.0); }), Errc::not_mean_zero);
}

TEST(Adams, ZeroHomogeneousAndAtLeastOne) {
  const auto spec = make_spec(1, 64);
  for (unsigned s = 0; s < 5; ++s) {
    const Field u = test::smooth_field(spec, s);
    const double a = adams_value(u);
    EXPECT_GE(a, 1.0);
    EXPECT_NEAR(adams_value(2.0 * u), a, 1e-12 * a);
    EXPECT_NEAR(adams_value(1e-6 * u), a, 1e-12 * a);
  }
  EXPECT_EQ(code_of([&] { adams_value(zero_field(spec)); }), Errc::invalid_argument);
}

TEST(Adams, FirstModeClosedForm) {
  // u = cos(2 pi x): exponent 4 pi cos^2 / (2 pi^2) = (2/pi) cos^2, mean = e^{1/pi} I_0(1/pi).
  const auto spec = make_spec(1, 64);
  const double z = 1.0 / pi;
  double i0 = 0.0, term = 1.0;
  for (int j = 0; j < 30; ++j) {
    i0 += term;
    term *= (z * z / 4.0) / ((j + 1.0) * (j + 1.0));
  }
  EXPECT_NEAR(adams_value(test::cos_mode(spec)), std::exp(z) * i0, 1e-13);
}

TEST(Adams, BubbleFamilyBounded) {
  std::vector<double> v;
  for (double sigma : {1e2, 1e3, 1e4}) v.push_back(radial_adams_value(sigma, 0.4, 1));
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  EXPECT_GE(*lo, 1.0);
  EXPECT_LE(*hi / *lo, 10.0);
  EXPECT_TRUE(std::isfinite(radial_adams_value(1e3, 0.4, 2)));
}

TEST(Adams, GridMatchesRadialQuadrature) {
  const auto spec = make_spec(1, 1024);
  const double grid = adams_value(bubble_field(spec, {20.0, 0.3, {}}));
  const double radial = radial_adams_value(20.0, 0.3, 1);
  EXPECT_NEAR(grid, radial, 0.03 * radial);
}

TEST(Coercivity, TrivialFamily) {
  const auto spec = make_spec(1, 16);
  const std::vector<CoercivitySample> fit{coercivity_sample(zero_field(spec), 5.0)};
  const CoercivityBand b = coercivity_band(5.0, 1, fit, fit);
  EXPECT_EQ(b.C, 0.0);
  EXPECT_TRUE(b.holds());
  EXPECT_NEAR(b.coefficient, 0.5 - 5.0 / (8 * pi), 1e-15);
}

TEST(Coercivity, BubbleBandValidatesBelowLambda1) {
  const double lambda = 10.0;
  std::vector<CoercivitySample> fit, val;
  // The gap coefficient ||u||^2 - I decreases in sigma, so the fit family
  // starts at the smallest sigma.
  for (double sigma : {3.0, 30.0, 300.0, 3000.0}) fit.push_back(coercivity_sample(bubble_sample(sigma, 0.4, lambda, 1)));
  for (double sigma : {5.0, 50.0, 500.0, 5000.0}) val.push_back(coercivity_sample(bubble_sample(sigma, 0.4, lambda, 1)));
  const CoercivityBand b = coercivity_band(lambda, 1, fit, val);
  EXPECT_TRUE(std::isfinite(b.C));
  EXPECT_EQ(b.validated, 4u);
  EXPECT_TRUE(b.holds()) << b.worst_margin;
  const auto spec = make_spec(1, 512);
  std::vector<CoercivitySample> grid;
  for (double sigma : {4.0, 8.0, 16.0, 32.0}) grid.push_back(coercivity_sample(bubble_field(spec, {sigma, 0.4, {}}), lambda));
  EXPECT_TRUE(coercivity_band(lambda, 1, fit, grid).holds());
}

TEST(Coercivity, Guards) {
  const std::vector<CoercivitySample> one{{0.0, 0.0}};
  EXPECT_EQ(code_of([&] { coercivity_band(13.0, 1, one, one); }), Errc::interval_violation);
  EXPECT_EQ(code_of([&] { coercivity_band(5.0, 1, std::vector<CoercivitySample>{}, one); }), Errc::invalid_argument);
}

TEST(Green, ReproductionIdentityIsExact) {
  for (auto spec : {make_spec(1, 128), make_spec(2, 8)}) {
    const std::size_t y = spec.size() / 3;
    const GreenField g = green_field(spec, y);
    EXPECT_LE(std::abs(integrate(g.values)), 1e-12 * g.values.max_abs());
    EXPECT_TRUE(g.values.mean_zero());
    for (unsigned s = 0; s < 5; ++s) EXPECT_LE(green_reproduction_error(g, test::smooth_field(spec, s, 4), y), 1e-10);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    std::vector<double> v(spec.size());
    for (double& x : v) x = gauss(rng);
    EXPECT_LE(green_reproduction_error(g, project_mean_zero(from_values(spec, v)), y), 1e-10);
  }
}

TEST(Green, LogCoefficient) {
  const GreenField g = green_field(make_spec(1, 512), 0);
  EXPECT_NEAR(g.log_target, 1.0 / (2 * pi), 1e-15);
  EXPECT_GT(g.fit_points, 100u);
  EXPECT_NEAR(g.log_coefficient, g.log_target, 0.05 * g.log_target);
  EXPECT_EQ(code_of([] { green_field(make_spec(1, 16), 256); }), Errc::invalid_argument);
}

TEST(InequalityChain, HoldsOnSaddleAndRandomFields) {
  const MPResult mp = mountain_pass(14.0, make_spec(1, 64));
  ASSERT_TRUE(mp.converged);
  const InequalityChain ch = check_inequality_chain(mp.maximizer, 14.0);
  EXPECT_TRUE(ch.ok());
  EXPECT_NEAR(ch.norm_sq, ch.identity_rhs, 1e-8 * ch.norm_sq);
  // Young's inequality ab <= e^a + b(log b - 1) holds for every field.
  for (unsigned s = 0; s < 5; ++s) {
    const InequalityChain r = check_inequality_chain(test::smooth_field(make_spec(1, 32), s), 1.0);
    EXPECT_EQ(r.pointwise_violations, 0u);
    EXPECT_TRUE(r.jensen_ok);
    EXPECT_FALSE(r.identity_ok);
  }
}

TEST(Nonexistence, OnlyTrivialSolutionsForSmallLambda) {
  const std::vector<double> lambdas{0.0, 0.25, 0.5, 1.0, 2.0};
  const NonexistenceReport rep = nonexistence_sweep(lambdas, make_spec(1, 32), 20, 5);
  EXPECT_NEAR(rep.regime_marker, pi / 2, 1e-15);
  ASSERT_EQ(rep.rows.size(), lambdas.size());
  for (const NonexistenceRow& r : rep.rows) {
    EXPECT_EQ(r.converged, 20) << r.lambda;
    EXPECT_EQ(r.nontrivial, 0) << r.lambda;
    EXPECT_LE(r.max_norm, 1e-8) << r.lambda;
    EXPECT_EQ(r.chain_failures, 0) << r.lambda;
    EXPECT_EQ(r.in_regime, r.lambda < pi / 2);
  }
  EXPECT_TRUE(rep.only_trivial());
  EXPECT_EQ(code_of([] { nonexistence_sweep(std::vector<double>{-1.0}, make_spec(1, 16), 1, 1); }),
            Errc::invalid_argument);
}

}  // namespace
}  // namespace pmf
