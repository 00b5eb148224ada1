#pragma once

#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qlm/jang_shitam.hpp"
#include "qlm/optimal.hpp"

namespace qlm {

struct ValidationConfig {
  int n_theta = 48;      // n_phi = 2 n_theta
  std::string only;      // restrict to one group; empty runs everything
  unsigned seed = 42;
  int threads = 1;
};

struct CheckRow {
  enum class Relation { abs, rel, at_least, at_most, greater };
  std::string id;
  std::string group;
  int criterion = 0;  // acceptance criterion number, 0 for supporting checks
  Relation relation = Relation::abs;
  double expected = 0.0, actual = 0.0, tolerance = 0.0;
  bool pass = false;
  std::string note;
};

inline bool evaluate_relation(CheckRow::Relation r, double expected, double actual, double tol) {
  if (!std::isfinite(actual)) return false;
  switch (r) {
    case CheckRow::Relation::abs: return std::abs(actual - expected) <= tol;
    case CheckRow::Relation::rel: return std::abs(actual - expected) <= tol * std::abs(expected);
    case CheckRow::Relation::at_least: return actual >= expected - tol;
    case CheckRow::Relation::at_most: return actual <= expected + tol;
    case CheckRow::Relation::greater: return actual > expected + tol;
  }
  return false;
}

/// Band-limited random field: degrees 1..l_max, coefficients N(0, 1/(1+l)^2),
/// scaled to max |f| = 1.
inline ScalarField random_band_limited(const GridPtr& g, int l_max, std::mt19937& rng) {
  HarmonicBasis b(g, l_max);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(b.size());
  for (int l = 1; l <= l_max; ++l)
    for (int m = -l; m <= l; ++m) c(b.index(l, m)) = nd(rng) / ((1.0 + l) * (1.0 + l));
  ScalarField f = b.field(c);
  return (1.0 / f.max_abs()) * f;
}

namespace detail {

/// Total mean curvature of the ellipsoid (a, b, c) from its explicit
/// parametrization, on a product Gauss grid of n x 2n nodes.
inline double ellipsoid_total_mean_curvature(double a, double b, double c, int n) {
  const GridPtr g = SphereGrid::make(n, 2 * n);
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2 * n; ++j) {
      const double st = g->sin_theta()(i), ct = g->cos_theta()(i);
      const double sp = std::sin(g->phi()(j)), cp = std::cos(g->phi()(j));
      const Eigen::Vector3d xt(a * ct * cp, b * ct * sp, -c * st), xp(-a * st * sp, b * st * cp, 0.0);
      const Eigen::Vector3d xtt(-a * st * cp, -b * st * sp, -c * ct), xtp(-a * ct * sp, b * ct * cp, 0.0),
          xpp(-a * st * cp, -b * st * sp, 0.0);
      const Eigen::Vector3d cr = xt.cross(xp);
      const double w = cr.norm();
      const Eigen::Vector3d nu = cr / w;
      const double E = xt.dot(xt), F = xt.dot(xp), G = xp.dot(xp);
      const double H = -(xtt.dot(nu) * G - 2.0 * xtp.dot(nu) * F + xpp.dot(nu) * E) / (w * w);
      total += g->quad_weights()(i, j) / st * H * w;
    }
  return total;
}

}  // namespace detail

/// Runs the acceptance checks and collects one row per check.
class ValidationSuite {
 public:
  explicit ValidationSuite(ValidationConfig cfg)
      : cfg_(std::move(cfg)), g_(SphereGrid::make(cfg_.n_theta, 2 * cfg_.n_theta)) {}

  std::vector<CheckRow> run() {
    rows_.clear();
    group("hawking", [&] { hawking(); });
    group("byly", [&] { byly(); });
    group("mass_relation", [&] { mass_relation(); });
    group("lightcone", [&] { lightcone(); });
    group("minkowski", [&] { minkowski(); });
    group("el_gradient", [&] { el_gradient(); });
    group("gauge", [&] { gauge(); });
    group("optimal", [&] { optimal(); });
    group("hessian", [&] { hessian(); });
    group("comparison", [&] { comparison(); });
    group("e_of_r", [&] { e_of_r_table(); });
    group("shi_tam", [&] { shi_tam(); });
    group("jang", [&] { jang(); });
    group("calculus", [&] { calculus(); });
    return rows_;
  }

  static std::vector<std::string> groups() {
    return {"hawking", "byly",    "mass_relation", "lightcone", "minkowski", "el_gradient", "gauge",
            "optimal", "hessian", "comparison",    "e_of_r",    "shi_tam",   "jang",        "calculus"};
  }

  static std::string csv(const std::vector<CheckRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "id,expected,actual,tolerance,pass,note\n";
    for (const auto& r : rows)
      os << r.id << ',' << r.expected << ',' << r.actual << ',' << r.tolerance << ',' << (r.pass ? "true" : "false")
         << ',' << r.note << '\n';
    return os.str();
  }

 private:
  ValidationConfig cfg_;
  GridPtr g_;
  std::vector<CheckRow> rows_;
  std::string group_;
  std::optional<OptimalSolveResult> schwarzschild_opt_;

  bool fine() const { return cfg_.n_theta >= 48; }
  /// Tolerance declared for the reference resolution and for coarser grids.
  double tol(double reference, double coarse) const { return fine() ? reference : coarse; }
  /// The isometry residual of strongly non-round metrics bottoms out near
  /// 1e-9 at n_theta = 24.
  WeylOptions weyl() const {
    WeylOptions w = detail::tight_weyl();
    if (!fine()) w.tol = 1e-8;
    return w;
  }

  void group(const std::string& name, const std::function<void()>& body) {
    if (!cfg_.only.empty() && cfg_.only != name) return;
    group_ = name;
    try {
      body();
    } catch (const std::exception& e) {
      CheckRow r;
      r.id = name + ".error";
      r.group = name;
      r.actual = std::numeric_limits<double>::quiet_NaN();
      r.note = e.what();
      for (char& ch : r.note)
        if (ch == ',' || ch == '\n') ch = ';';
      rows_.push_back(r);
    }
  }

  void add(const std::string& id, int criterion, CheckRow::Relation rel, double expected, double actual, double tol,
           std::string note = "") {
    CheckRow r{group_ + "." + id, group_, criterion, rel, expected, actual, tol,
               evaluate_relation(rel, expected, actual, tol), std::move(note)};
    rows_.push_back(std::move(r));
  }

  static double byly_closed(double m, double r) { return r * (1.0 - std::sqrt(1.0 - 2.0 * m / r)); }

  SurfaceData schwarzschild(double r) const { return *schwarzschild_sphere_data({1.0, r}, g_).data; }

  void hawking() {
    for (double r : {3.0, 4.0, 10.0})
      add("m1_r" + std::to_string(static_cast<int>(r)), 1, CheckRow::Relation::abs, 1.0,
          hawking_mass(schwarzschild(r)), 1e-7);
  }

  void byly() {
    add("m1_r4", 2, CheckRow::Relation::abs, byly_closed(1.0, 4.0), byly_mass(schwarzschild(4.0)), 1e-6);
    const EmbeddingR3 round = solve_weyl(Metric2::round(g_, 4.0), detail::tight_weyl());
    add("round_isometry_residual", 2, CheckRow::Relation::at_most, 0.0, round.residual, 1e-9);
    const double a = 1.0, b = 1.2, c = 1.5;
    const MinkowskiSurface s = minkowski_surface_data(MinkowskiSurfaceSpec::flat_r3(a, b, c), g_);
    const EmbeddingR3 x = solve_weyl(s.data.sigma, detail::tight_weyl());
    const double tmc = integrate(s.data.sigma, extract_geometry(x).H_hat);
    add("ellipsoid_total_mean_curvature", 2, CheckRow::Relation::rel,
        detail::ellipsoid_total_mean_curvature(a, b, c, 2 * cfg_.n_theta), tmc, tol(1e-6, 1e-5));
  }

  void mass_relation() {
    for (double r : {3.0, 4.0, 10.0})
      add("r" + std::to_string(static_cast<int>(r)), 3, CheckRow::Relation::at_most, 0.0,
          mass_relation_check({1.0, r}), 1e-10);
  }

  void lightcone() {
    const auto spec = MinkowskiSurfaceSpec::lightcone_bump(0.1, 2, 1);
    const LightconeRigidityReport rep = lightcone_rigidity_report(spec, g_, weyl());
    add("hawking_zero", 4, CheckRow::Relation::abs, 0.0, rep.hawking, 1e-7);
    add("byly_positive", 4, CheckRow::Relation::greater, 0.0, rep.byly, 0.0);
    add("byly_eigenvalue_formula", 4, CheckRow::Relation::abs, rep.byly_formula, rep.byly, tol(1e-6, 1e-5));
    add("gauss_curvature_identity", 0, CheckRow::Relation::at_most, 0.0, rep.max_curvature_identity_defect,
        tol(1e-7, 1e-6));
  }

  std::vector<MinkowskiSurfaceSpec> minkowski_specs() const {
    return {MinkowskiSurfaceSpec::lightcone_bump(0.1), MinkowskiSurfaceSpec::lightcone_bump(0.1, 2, 1),
            MinkowskiSurfaceSpec::flat_r3(1.0, 1.1, 1.2),
            MinkowskiSurfaceSpec::graph_over_convex(
                1.0, 1.1, 1.2, [](double t, double p) { return 0.1 * std::sin(t) * std::sin(t) * std::cos(2 * p); })};
  }

  void minkowski() {
    int k = 0;
    for (const auto& spec : minkowski_specs()) {
      const MinkowskiSurface s = minkowski_surface_data(spec, g_);
      add(spec.name + "_" + std::to_string(k++), 5, CheckRow::Relation::abs, 0.0,
          wang_yau_energy(s.data, s.tau_bar, weyl()).energy, 1e-6);
    }
  }

  void el_gradient() {
    std::mt19937 rng(cfg_.seed);
    const MinkowskiSurface lc = minkowski_surface_data(MinkowskiSurfaceSpec::lightcone_bump(0.1, 2, 1), g_);
    const std::vector<std::pair<std::string, std::pair<SurfaceData, TimeFunction>>> sets = {
        {"schwarzschild", {schwarzschild(4.0), {harmonic_field(g_, 1, 0, 0.05) + harmonic_field(g_, 2, 2, 0.03)}}},
        {"lightcone", {lc.data, {lc.tau_bar.tau + harmonic_field(g_, 2, 0, 0.02)}}}};
    const double h = 1e-4;
    for (const auto& [name, dt] : sets) {
      const auto& [d, t] = dt;
      EnergyEvaluator ev(g_, weyl());
      const ScalarField el = ev.el_residual(d, t);
      double worst = 0.0;
      for (int k = 0; k < 5; ++k) {
        const ScalarField dir = random_band_limited(g_, 6, rng);
        const double analytic = detail::inv_8pi * integrate(d.sigma, el * dir);
        const double ep = ev.energy(d, {t.tau + h * dir}).energy;
        const double em = ev.energy(d, {t.tau + (-h) * dir}).energy;
        const double fd = (ep - em) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - analytic) / std::max(std::abs(fd), std::abs(analytic)));
      }
      add(name + "_max_relative_error", 6, CheckRow::Relation::at_most, 0.0, worst, tol(1e-5, 2e-3),
          "5 random directions");
    }
  }

  void gauge() {
    const MinkowskiSurface lc = minkowski_surface_data(MinkowskiSurfaceSpec::lightcone_bump(0.1, 2, 1), g_);
    const std::vector<std::pair<std::string, std::pair<SurfaceData, TimeFunction>>> sets = {
        {"schwarzschild", {schwarzschild(4.0), {harmonic_field(g_, 1, 0, 0.05) + harmonic_field(g_, 2, 2, 0.03)}}},
        {"lightcone", {lc.data, {lc.tau_bar.tau + harmonic_field(g_, 2, 0, 0.02)}}}};
    const ScalarField y20 = harmonic_field(g_, 2, 0, 1.0);
    for (const auto& [name, dt] : sets) {
      const auto& [d, t] = dt;
      const ScalarField theta = theta_field(d, t);
      const double base = gauge_functional(d, t, theta);
      double gap = std::numeric_limits<double>::infinity();
      for (double eps : {1e-2, -1e-2}) gap = std::min(gap, gauge_functional(d, t, theta + eps * y20) - base);
      add(name + "_theta_minimizes", 7, CheckRow::Relation::at_least, 0.0, gap, 0.0, "min over eps = +-1e-2");
    }
  }

  const OptimalSolveResult& schwarzschild_optimal() {
    if (!schwarzschild_opt_)
      schwarzschild_opt_ = solve_optimal(schwarzschild(4.0), {harmonic_field(g_, 1, 0, 0.05)});
    return *schwarzschild_opt_;
  }

  void optimal() {
    const OptimalSolveResult& res = schwarzschild_optimal();
    add("converged", 8, CheckRow::Relation::at_least, 1.0, res.converged ? 1.0 : 0.0, 0.0,
        std::to_string(res.iterations) + " iterations");
    add("tau_star_linf", 8, CheckRow::Relation::at_most, 0.0, res.tau_star.tau.max_abs(), 1e-5);
    add("energy", 8, CheckRow::Relation::abs, byly_closed(1.0, 4.0), res.energy, 1e-5);
  }

  void hessian() {
    const OptimalSolveResult& res = schwarzschild_optimal();
    const HessianReport hs = hessian_check(schwarzschild(4.0), res.tau_star, 15, 1e-3, {}, cfg_.threads);
    add("schwarzschild_min_eig", 9, CheckRow::Relation::greater, 0.0, hs.min_eigenvalue, 0.0);
    add("schwarzschild_symmetry", 9, CheckRow::Relation::at_most, 0.0, hs.symmetry_error, 1e-6);
    const MinkowskiSurface fl = minkowski_surface_data(MinkowskiSurfaceSpec::flat_r3(1.0, 1.1, 1.2), g_);
    const HessianReport hf = hessian_check(fl.data, fl.tau_bar, 15, 1e-3, {}, cfg_.threads);
    add("flat_min_eig", 9, CheckRow::Relation::at_least, 0.0, hf.min_eigenvalue, 1e-7);
  }

  void comparison() {
    const SurfaceData d = schwarzschild(4.0);
    const TimeFunction star = schwarzschild_optimal().tau_star;
    const std::vector<std::pair<std::string, ScalarField>> perturbations = {
        {"y20", harmonic_field(g_, 2, 0, 0.05)},
        {"y11", harmonic_field(g_, 1, 1, 0.05)},
        {"y21_y32", harmonic_field(g_, 2, 1, 0.03) + harmonic_field(g_, 3, -2, 0.02)},
        {"y10_y22", harmonic_field(g_, 1, 0, 0.04) + harmonic_field(g_, 2, -2, 0.03)}};
    for (const auto& [name, dt] : perturbations)
      add(name, 10, CheckRow::Relation::at_least, 0.0, comparison_check(d, star, {star.tau + dt}).slack, 1e-6);
    add("constant_shift", 10, CheckRow::Relation::abs, 0.0,
        comparison_check(d, star, {star.tau + ScalarField::constant(g_, 0.3)}).slack, 1e-6);
  }

  void e_of_r_table() {
    const QuasiSphericalState s = shi_tam_flow(4.0, 1.0 / std::sqrt(0.5), 1e3);
    const EOfRTable t = e_of_r(s);
    add("strictly_decreasing", 11, CheckRow::Relation::at_least, 1.0, t.strictly_decreasing ? 1.0 : 0.0, 0.0,
        std::to_string(t.r.size()) + " radii in [4; 1000]");
    add("limit_r1000", 11, CheckRow::Relation::abs, 1.0, t.e.back(), 3e-3);
    add("e4_matches_byly", 11, CheckRow::Relation::abs, byly_mass(schwarzschild(4.0)), t.e.front(), 1e-8);
    for (double r : {4.0, 10.0, 100.0, 1000.0}) {
      const double u = shi_tam_integrate(s, r);
      add("ode_r" + std::to_string(static_cast<int>(r)), 0, CheckRow::Relation::abs, r * (1.0 - 1.0 / u),
          r * (1.0 - 1.0 / s.u(r)), 1e-9, "closed form vs integrated u");
    }
  }

  void shi_tam() {
    const QuasiSphericalState s = shi_tam_flow(4.0, 1.0 / std::sqrt(0.5), 1e3);
    add("energy_from_boundary_value", 0, CheckRow::Relation::abs, 1.0, s.energy, 1e-12);
    const AdmEstimate adm = adm_energy_radial(s, 1e3, g_);
    std::ostringstream note;
    note.precision(10);
    note << "flux at r=1000: " << adm.at_r << "; at r=2000: " << adm.at_2r;
    add("adm_flux_r1000", 11, CheckRow::Relation::abs, 1.0, adm.extrapolated, 1e-3, note.str());
    add("adm_flux_r1000_tight", 0, CheckRow::Relation::abs, 1.0, adm.extrapolated, 1e-4);
    const ShiTamPositivityReport p = shi_tam_positivity_instance(4.0, 0.5 * std::sqrt(0.5));
    add("positivity_schwarzschild_boundary", 0, CheckRow::Relation::abs, byly_closed(1.0, 4.0), p.brown_york,
        1e-12);
    add("positivity_chain", 0, CheckRow::Relation::at_least, 1.0, p.chain_holds ? 1.0 : 0.0, 0.0);
  }

  void jang() {
    const RadialInitialData hy = RadialInitialData::hyperboloid(1.0, 10.0);
    double worst = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double r = 1.0 + 9.0 * k / 400.0, q = std::sqrt(1.0 + r * r);
      worst = std::max(worst, std::abs(jang_operator_radial(hy, r, {q, r / q, 1.0 / (q * q * q)})));
    }
    add("hyperboloid_exact_residual", 12, CheckRow::Relation::at_most, 0.0, worst, 1e-8);
    JangOptions o;
    o.far_slope = 10.0 / std::sqrt(101.0);
    const RadialFunction f = solve_jang_radial(hy, std::sqrt(2.0), o);
    double err = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double r = 1.0 + 9.0 * k / 400.0;
      err = std::max(err, std::abs(f(r).f - std::sqrt(1.0 + r * r)));
    }
    add("hyperboloid_solve_error", 0, CheckRow::Relation::at_most, 0.0, err, 1e-7);
    add("hyperboloid_solve_residual", 0, CheckRow::Relation::at_most, 0.0, jang_residual_radial(hy, f).max_abs(),
        1e-8);
    const RadialInitialData ts = RadialInitialData::schwarzschild(1.0, 3.0, 50.0);
    const RadialFunction c = solve_jang_radial(ts, 0.7);
    double dev = 0.0;
    for (const auto& j : c.node_jets()) dev = std::max(dev, std::abs(j.f - 0.7) + std::abs(j.df));
    add("time_symmetric_constant", 12, CheckRow::Relation::at_most, 0.0, dev, 1e-12);
    double op = 0.0;
    for (int k = 0; k <= 400; ++k)
      op = std::max(op, std::abs(jang_operator_radial(ts, 3.0 + 47.0 * k / 400.0, {0.7, 0.0, 0.0})));
    add("time_symmetric_constant_residual", 12, CheckRow::Relation::at_most, 0.0, op, 0.0);
  }

  void calculus() {
    std::vector<std::pair<std::string, Metric2>> metrics = {{"schwarzschild", schwarzschild(4.0).sigma}};
    int k = 0;
    for (const auto& spec : minkowski_specs())
      metrics.emplace_back(spec.name + "_" + std::to_string(k++), minkowski_surface_data(spec, g_).data.sigma);
    for (const auto& [name, s] : metrics)
      add("gauss_bonnet_" + name, 13, CheckRow::Relation::abs, 4.0 * std::numbers::pi,
          integrate(s, gauss_curvature(s)), 1e-7);

    std::mt19937 rng(cfg_.seed + 1);
    const Metric2& s = metrics.back().second;
    const ScalarField f = random_band_limited(g_, 8, rng), h = random_band_limited(g_, 8, rng);
    const double a = integrate(s, f * laplacian(s, h)), b = integrate(s, h * laplacian(s, f));
    add("laplacian_adjointness", 13, CheckRow::Relation::at_most, 0.0, std::abs(a - b) / std::abs(a), 1e-9);

    // d/dtheta of exp(k y) with y = sin(theta) sin(phi): under-resolved at
    // n_theta = 24, resolved at 48.
    auto err = [](int n) {
      const GridPtr g = SphereGrid::make(n, 2 * n);
      const double kk = 12.0;
      const ScalarField v = ScalarField::from_function(
          g, [&](double t, double p) { return std::exp(kk * std::sin(t) * std::sin(p)); });
      const ScalarField dv = ScalarField::from_function(g, [&](double t, double p) {
        return kk * std::cos(t) * std::sin(p) * std::exp(kk * std::sin(t) * std::sin(p));
      });
      return (gradient(v).t - dv.values).abs().maxCoeff() / dv.max_abs();
    };
    const double e24 = err(24), e48 = err(48);
    std::ostringstream note;
    note.precision(3);
    note << "errors " << e24 << " / " << e48;
    add("spectral_convergence_ratio", 13, CheckRow::Relation::at_most, 0.0, e48 / e24, 0.1, note.str());
  }
};

inline std::vector<CheckRow> run_validation(const ValidationConfig& cfg) { return ValidationSuite(cfg).run(); }

}  // namespace qlm
