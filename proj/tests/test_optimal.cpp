#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qlm/catalog.hpp"
#include "qlm/optimal.hpp"

using namespace qlm;

namespace {

SurfaceData schwarzschild(const GridPtr& g, double m, double r, OneForm alpha) {
  return {Metric2::round(g, r), ScalarField::constant(g, 2.0 / r * std::sqrt(1.0 - 2.0 * m / r)), std::move(alpha)};
}
SurfaceData schwarzschild(const GridPtr& g, double m, double r) { return schwarzschild(g, m, r, OneForm::zero(g)); }

double closed_form_byly(double m, double r) { return r * (1.0 - std::sqrt(1.0 - 2.0 * m / r)); }

GridPtr grid() { return SphereGrid::make(32, 64); }

ScalarField random_direction(const GridPtr& g, int l_max, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  ScalarField f = ScalarField::zero(g);
  for (int l = 1; l <= l_max; ++l)
    for (int m = -l; m <= l; ++m) f = f + harmonic_field(g, l, m, nd(rng) / (l * l));
  return (1.0 / f.max_abs()) * f;
}

}  // namespace

TEST(Optimal, SchwarzschildReturnsToStaticSlice) {
  auto g = grid();
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  const OptimalSolveResult r = solve_optimal(d, {harmonic_field(g, 1, 0, 0.05)});
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.el_residual_norm, 1e-6);
  EXPECT_LT(r.tau_star.tau.max_abs(), 1e-5);
  EXPECT_NEAR(r.energy, closed_form_byly(1.0, 4.0), 1e-5);
  for (std::size_t k = 1; k < r.energy_history.size(); ++k)
    EXPECT_LE(r.energy_history[k], r.energy_history[k - 1] + 1e-12) << "iterate " << k;
}

TEST(Optimal, IndependentStartsAgree) {
  auto g = grid();
  const SurfaceData d = schwarzschild(g, 1.0, 6.0);
  const OptimalSolveResult a = solve_optimal(d, {harmonic_field(g, 1, 0, 0.05)});
  const OptimalSolveResult b = solve_optimal(d, {harmonic_field(g, 2, 1, 0.03) + harmonic_field(g, 2, 0, 0.02)});
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_LT((a.tau_star.tau.values - b.tau_star.tau.values).abs().maxCoeff(), 1e-5);
  EXPECT_NEAR(a.energy, b.energy, 1e-9);
}

TEST(Optimal, FirstOrderCriticality) {
  auto g = grid();
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  const OptimalSolveResult r = solve_optimal(d, {harmonic_field(g, 1, 1, 0.05)});
  ASSERT_TRUE(r.converged);
  std::mt19937 rng(11);
  EnergyEvaluator ev(g);
  const double h = 1e-4;
  for (int k = 0; k < 3; ++k) {
    ScalarField dir = random_direction(g, 5, rng);
    dir = (1.0 / l2_norm(d.sigma, dir)) * dir;
    const double ep = ev.energy(d, {r.tau_star.tau + h * dir}).energy;
    const double em = ev.energy(d, {r.tau_star.tau + (-h) * dir}).energy;
    EXPECT_LT(std::abs(ep - em) / (2.0 * h), 10.0 * 1e-6);
    EXPECT_GE(0.5 * (ep + em) - r.energy, -1e-12);
  }
}

TEST(Optimal, TimeflatDataHaveZeroOptimalTime) {
  // Axisymmetric, divergence-free alpha_H on a Schwarzschild sphere.
  auto g = grid();
  const OneForm alpha{g, Array::Zero(g->n_theta(), g->n_phi()),
                      ScalarField::from_function(g, [](double t, double) { return 0.3 * std::sin(t) * std::sin(t); })
                          .values};
  const SurfaceData d = schwarzschild(g, 1.0, 4.0, alpha);
  const OptimalSolveResult r = solve_optimal(d, {harmonic_field(g, 2, 0, 0.05)});
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.tau_star.tau.max_abs(), 1e-5);
}

TEST(Optimal, LightconeOptimumIsABoostOfTheCut) {
  auto g = grid();
  const MinkowskiSurface lc = minkowski_surface_data(MinkowskiSurfaceSpec::lightcone_bump(0.1), g);
  const OptimalSolveResult r = solve_optimal(lc.data, {lc.tau_bar.tau + harmonic_field(g, 2, 0, 0.02)});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, 0.0, 1e-5);
  // tau_star = -<X, T> for a unit timelike T: fit a X^0 + w.X + c and check a^2 - |w|^2 = 1.
  const int n = g->n_theta() * g->n_phi();
  Eigen::MatrixXd A(n, 5);
  Eigen::VectorXd y(n);
  for (int i = 0; i < g->n_theta(); ++i)
    for (int j = 0; j < g->n_phi(); ++j) {
      const int k = i * g->n_phi() + j;
      for (int mu = 0; mu < 4; ++mu) A(k, mu) = lc.X[mu].values(i, j);
      A(k, 4) = 1.0;
      y(k) = r.tau_star.tau.values(i, j);
    }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  EXPECT_LT((A * c - y).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_NEAR(c(0) * c(0) - c.segment(1, 3).squaredNorm(), 1.0, 1e-4);
}

TEST(Optimal, LocalMinimumProperty) {
  auto g = grid();
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  const OptimalSolveResult r = solve_optimal(d, {harmonic_field(g, 1, 0, 0.05)});
  ASSERT_TRUE(r.converged);
  std::mt19937 rng(3);
  EnergyEvaluator ev(g);
  for (int k = 0; k < 4; ++k) {
    const ScalarField dir = random_direction(g, 4, rng);
    EXPECT_GE(ev.energy(d, {r.tau_star.tau + 0.01 * dir}).energy, r.energy - 1e-10);
  }
}

TEST(Optimal, IterationCapReportsNotConverged) {
  auto g = SphereGrid::make(24, 48);
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  OptimalOptions o;
  o.max_iterations = 1;
  const OptimalSolveResult r = solve_optimal(d, {harmonic_field(g, 1, 0, 0.3)}, o);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Optimal, CollapsedTrustRegionThrows) {
  auto g = SphereGrid::make(24, 48);
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  OptimalOptions o;
  o.min_radius = 1.0;
  try {
    solve_optimal(d, {harmonic_field(g, 1, 0, 0.3)}, o);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("trust region"), std::string::npos);
  }
}

TEST(Hessian, PositiveOnSchwarzschildAndThreadIndependent) {
  auto g = grid();
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  const TimeFunction zero = TimeFunction::zero(g);
  const HessianReport one = hessian_check(d, zero, 8, 1e-3, {}, 1);
  const HessianReport two = hessian_check(d, zero, 8, 1e-3, {}, 2);
  EXPECT_GT(one.min_eigenvalue, 0.0);
  EXPECT_LT(one.symmetry_error, 1e-6);
  EXPECT_EQ((one.hessian - two.hessian).cwiseAbs().maxCoeff(), 0.0);
  for (int deg : one.degrees) EXPECT_GE(deg, 1);
}

TEST(Hessian, FlatDataIsPositiveSemidefinite) {
  auto g = grid();
  const MinkowskiSurface s = minkowski_surface_data(MinkowskiSurfaceSpec::flat_r3(1.0, 1.1, 1.2), g);
  const HessianReport rep = hessian_check(s.data, TimeFunction::zero(g), 8);
  EXPECT_GE(rep.min_eigenvalue, -1e-7);
}

TEST(Hessian, RequiresCriticalPoint) {
  auto g = SphereGrid::make(24, 48);
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  EXPECT_THROW(hessian_check(d, {harmonic_field(g, 1, 0, 0.2)}, 4), PreconditionError);
}

TEST(Comparison, InequalityHoldsNearSchwarzschildOptimum) {
  auto g = grid();
  const SurfaceData d = schwarzschild(g, 1.0, 4.0);
  const TimeFunction star = TimeFunction::zero(g);
  for (const ScalarField& dt : {harmonic_field(g, 2, 0, 0.05), harmonic_field(g, 1, 1, 0.05),
                                harmonic_field(g, 3, -2, 0.03)}) {
    const ComparisonReport rep = comparison_check(d, star, {dt});
    EXPECT_GT(rep.rho_min, 0.0);
    EXPECT_GE(rep.slack, -1e-6);
  }
  const ComparisonReport shift = comparison_check(d, star, {ScalarField::constant(g, 0.7)});
  EXPECT_NEAR(shift.slack, 0.0, 1e-6);
}

TEST(Comparison, RequiresPositiveDensity) {
  auto g = SphereGrid::make(24, 48);
  const SurfaceData d(Metric2::round(g, 2.0), ScalarField::constant(g, 1.5), OneForm::zero(g));
  EXPECT_THROW(comparison_check(d, TimeFunction::zero(g), {harmonic_field(g, 2, 0, 0.05)}), PreconditionError);
}
