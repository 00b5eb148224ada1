#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlm/functionals.hpp"

namespace qlm {

/// Sphere of symmetry with areal radius r in the static Schwarzschild slice.
struct SphericalSphereSpec {
  double mass_param = 1.0;
  double r = 4.0;
};

struct SphericalSphereData {
  std::optional<SurfaceData> data;  // absent on the horizon, where |H| = 0
  double m_hawking = 0.0;           // (r/2)(1 - |grad r|^2)
  double M_byly = 0.0;              // r (1 - |grad r|)
  double grad_r = 0.0;              // |grad r|
};

inline SphericalSphereData schwarzschild_sphere_data(const SphericalSphereSpec& spec, const GridPtr& grid) {
  const double m = spec.mass_param, r = spec.r;
  if (!(m >= 0.0) || !(r > 0.0)) throw DomainError("schwarzschild_sphere_data: need m >= 0 and r > 0");
  if (r < 2.0 * m)
    throw DomainError("schwarzschild_sphere_data: r = " + std::to_string(r) + " is inside the horizon r = " +
                      std::to_string(2.0 * m));
  SphericalSphereData out;
  const double grad_r2 = 1.0 - 2.0 * m / r;
  out.grad_r = std::sqrt(grad_r2);
  out.m_hawking = 0.5 * r * (1.0 - grad_r2);
  out.M_byly = r * (1.0 - out.grad_r);
  if (r > 2.0 * m)
    out.data = SurfaceData(Metric2::round(grid, r), ScalarField::constant(grid, 2.0 / r * out.grad_r),
                           OneForm::zero(grid));
  return out;
}

/// |m - (M - M^2 / (2 r))| from the closed-form sphere values.
inline double mass_relation_check(const SphericalSphereSpec& spec) {
  const double r = spec.r;
  const double grad_r = std::sqrt(1.0 - 2.0 * spec.mass_param / r);
  const double m = 0.5 * r * (1.0 - grad_r * grad_r);
  const double M = r * (1.0 - grad_r);
  return std::abs(m - (M - M * M / (2.0 * r)));
}

/// Explicit closed spacelike surface in R^{3,1}, given by its coordinate functions.
struct MinkowskiSurfaceSpec {
  enum class Kind { lightcone_cut, graph_over_convex, flat_r3 };
  Kind kind = Kind::flat_r3;
  std::string name;
  std::function<std::array<double, 4>(double, double)> embedding;
  /// For light-cone cuts, the radial profile f; X = (f, f n).
  std::function<double(double, double)> profile;

  /// Cut of the future light cone t = |x| at height f(theta, phi).
  static MinkowskiSurfaceSpec lightcone_cut(std::function<double(double, double)> f, std::string name = "lightcone") {
    MinkowskiSurfaceSpec s;
    s.kind = Kind::lightcone_cut;
    s.name = std::move(name);
    s.profile = f;
    s.embedding = [f](double t, double p) -> std::array<double, 4> {
      const double v = f(t, p);
      return {v, v * std::sin(t) * std::cos(p), v * std::sin(t) * std::sin(p), v * std::cos(t)};
    };
    return s;
  }
  /// f = radius * exp(amplitude * Y_lm), Y in the Schmidt convention.
  static MinkowskiSurfaceSpec lightcone_bump(double amplitude, int l = 1, int m = 0, double radius = 1.0) {
    return lightcone_cut(
        [=](double t, double p) { return radius * std::exp(amplitude * schmidt_harm(l, m, t, p)); },
        "lightcone_bump");
  }
  /// Ellipsoid with semi-axes (a, b, c) in the t = 0 slice.
  static MinkowskiSurfaceSpec flat_r3(double a, double b, double c) {
    MinkowskiSurfaceSpec s;
    s.kind = Kind::flat_r3;
    s.name = "flat_r3";
    s.embedding = [=](double t, double p) -> std::array<double, 4> {
      return {0.0, a * std::sin(t) * std::cos(p), b * std::sin(t) * std::sin(p), c * std::cos(t)};
    };
    return s;
  }
  /// Graph t = time(theta, phi) over the ellipsoid (a, b, c).
  static MinkowskiSurfaceSpec graph_over_convex(double a, double b, double c,
                                                std::function<double(double, double)> time) {
    MinkowskiSurfaceSpec s;
    s.kind = Kind::graph_over_convex;
    s.name = "graph_over_convex";
    s.embedding = [=](double t, double p) -> std::array<double, 4> {
      return {time(t, p), a * std::sin(t) * std::cos(p), b * std::sin(t) * std::sin(p), c * std::cos(t)};
    };
    return s;
  }
};

struct MinkowskiSurface {
  SurfaceData data;
  TimeFunction tau_bar;  // X^0, mean removed
  std::array<ScalarField, 4> X;
  std::array<ScalarField, 4> H;  // mean curvature vector Delta_sigma X
};

namespace detail {

inline long node_of(const Array& a, Eigen::Index i, Eigen::Index j) { return static_cast<long>(i * a.cols() + j); }

}  // namespace detail

/// Physical data of an explicit surface in Minkowski space. The normal frame
/// is e_H = H / |H| and the future unit timelike normal e_J orthogonal to it;
/// alpha_H(v) = <d_v e_J, e_H>.
inline MinkowskiSurface minkowski_surface_from_values(std::array<ScalarField, 4> X);

inline MinkowskiSurface minkowski_surface_data(const MinkowskiSurfaceSpec& spec, const GridPtr& grid) {
  std::array<ScalarField, 4> X;
  for (int mu = 0; mu < 4; ++mu)
    X[mu] = ScalarField::from_function(grid, [&](double t, double p) { return spec.embedding(t, p)[mu]; });

  if (spec.kind == MinkowskiSurfaceSpec::Kind::lightcone_cut) {
    // K = (1 - Delta_round log f) / f^2 must stay positive.
    const ScalarField f = ScalarField::from_function(grid, spec.profile);
    if (!(f.min() > 0.0)) throw DomainError("lightcone_cut: profile f must be positive");
    const ScalarField logf{grid, f.values.log()};
    const Array K = (1.0 - laplacian(Metric2::round(grid), logf).values) / f.values.square();
    Eigen::Index i, j;
    const double kmin = K.minCoeff(&i, &j);
    if (!(kmin > 0.0))
      throw DomainError("lightcone_cut: induced curvature " + std::to_string(kmin) + " <= 0 at node (" +
                        std::to_string(i) + ", " + std::to_string(j) + ")");
  }

  return minkowski_surface_from_values(std::move(X));
}

/// Same as minkowski_surface_data for coordinate functions sampled on a grid.
inline MinkowskiSurface minkowski_surface_from_values(std::array<ScalarField, 4> X) {
  MinkowskiSurface out;
  out.X = std::move(X);
  const GridPtr grid = out.X[0].grid;
  const std::array<double, 4> eta{-1.0, 1.0, 1.0, 1.0};
  std::optional<Metric2> sigma;
  try {
    sigma.emplace(pullback(std::span<const ScalarField>(out.X.data(), 4), eta));
  } catch (const PreconditionError& e) {
    throw GeometryError(std::string("minkowski_surface_data: induced metric not spacelike: ") + e.what(), e.node());
  }

  Array hn2 = Array::Zero(grid->n_theta(), grid->n_phi());
  for (int mu = 0; mu < 4; ++mu) {
    out.H[mu] = laplacian(*sigma, out.X[mu]);
    hn2 += eta[mu] * out.H[mu].values.square();
  }
  Eigen::Index bi, bj;
  if (!(hn2.minCoeff(&bi, &bj) > 0.0))
    throw GeometryError("minkowski_surface_data: mean curvature vector not spacelike at node (" +
                            std::to_string(bi) + ", " + std::to_string(bj) + ")",
                        detail::node_of(hn2, bi, bj));
  const Array hnorm = hn2.sqrt();

  // v_mu = eps_{mu nu rho lambda} X_theta^nu X_phi^rho H^lambda (cofactors), then raise.
  std::array<Array, 4> xt, xp, h;
  for (int mu = 0; mu < 4; ++mu) {
    xt[mu] = grid->d_theta(out.X[mu].values, Parity::even);
    xp[mu] = grid->d_phi(out.X[mu].values);
    h[mu] = out.H[mu].values;
  }
  auto minor3 = [&](int a, int b, int c) {
    return xt[a] * (xp[b] * h[c] - xp[c] * h[b]) - xt[b] * (xp[a] * h[c] - xp[c] * h[a]) +
           xt[c] * (xp[a] * h[b] - xp[b] * h[a]);
  };
  std::array<Array, 4> v{minor3(1, 2, 3), -minor3(0, 2, 3), minor3(0, 1, 3), -minor3(0, 1, 2)};
  v[0] = -v[0];
  const Array vn2 = -v[0].square() + v[1].square() + v[2].square() + v[3].square();
  if (!(vn2.maxCoeff(&bi, &bj) < 0.0))
    throw GeometryError("minkowski_surface_data: degenerate normal bundle at node (" + std::to_string(bi) + ", " +
                            std::to_string(bj) + ")",
                        detail::node_of(vn2, bi, bj));
  const Array scale = v[0].sign() / (-vn2).sqrt();  // future pointing
  std::array<Array, 4> eJ;
  for (int mu = 0; mu < 4; ++mu) eJ[mu] = v[mu] * scale;

  Array at = Array::Zero(grid->n_theta(), grid->n_phi()), ap = at;
  for (int mu = 0; mu < 4; ++mu) {
    const Array eH = h[mu] / hnorm;
    at += eta[mu] * grid->d_theta(eJ[mu], Parity::even) * eH;
    ap += eta[mu] * grid->d_phi(eJ[mu]) * eH;
  }
  out.data = SurfaceData(std::move(*sigma), ScalarField(grid, hnorm), OneForm(grid, at, ap));
  out.tau_bar = TimeFunction{out.X[0]}.mean_removed();
  return out;
}

struct LightconeRigidityReport {
  double hawking = 0.0;
  double byly = 0.0;
  double byly_formula = 0.0;  // (1/8pi) int (sqrt(l1) - sqrt(l2))^2
  double difference = 0.0;
  double max_curvature_identity_defect = 0.0;  // max |K - |H|^2 / 4|
};

inline LightconeRigidityReport lightcone_rigidity_report(const MinkowskiSurfaceSpec& spec, const GridPtr& grid,
                                                         WeylOptions opts = detail::tight_weyl()) {
  if (spec.kind != MinkowskiSurfaceSpec::Kind::lightcone_cut)
    throw PreconditionError("lightcone_rigidity_report: spec must be a light-cone cut");
  const MinkowskiSurface s = minkowski_surface_data(spec, grid);
  const SurfaceData& d = s.data;
  const EmbeddedGeometry geo = extract_geometry(solve_weyl(d.sigma, opts));
  LightconeRigidityReport rep;
  rep.hawking = hawking_mass(d);
  rep.byly = detail::inv_8pi * (integrate(d.sigma, geo.H_hat) - integrate(d.sigma, d.H_norm));
  const Array gap = geo.lambda1.values.sqrt() - geo.lambda2.values.max(0.0).sqrt();
  rep.byly_formula = detail::inv_8pi * integrate(d.sigma, ScalarField(grid, gap.square()));
  rep.difference = std::abs(rep.byly - rep.byly_formula);
  rep.max_curvature_identity_defect =
      (gauss_curvature(d.sigma).values - 0.25 * d.H_norm.values.square()).abs().maxCoeff();
  return rep;
}

struct MonotonicityTable {
  std::vector<double> r, hawking, closed_form;
  bool non_decreasing = true;
  bool non_increasing = true;
  double max_closed_form_error = 0.0;
};

/// Hawking mass of the spheres of symmetry r = const when
/// |grad r|^2 = 1 - 2m/r - eps/r^2 (eps = 0 is the time-symmetric
/// Schwarzschild slice, where these spheres are the inverse mean curvature
/// flow). Closed form: m + eps / (2 r).
inline MonotonicityTable imcf_hawking_monotonicity(double m, const std::vector<double>& radii, const GridPtr& grid,
                                                   double eps = 0.0) {
  if (!(m >= 0.0)) throw DomainError("imcf_hawking_monotonicity: m must be >= 0");
  MonotonicityTable t;
  for (double r : radii) {
    const double g2 = 1.0 - 2.0 * m / r - eps / (r * r);
    if (!(r > 2.0 * m) || !(g2 > 0.0))
      throw DomainError("imcf_hawking_monotonicity: radius " + std::to_string(r) + " is not outside the horizon");
    const SurfaceData d(Metric2::round(grid, r), ScalarField::constant(grid, 2.0 / r * std::sqrt(g2)),
                        OneForm::zero(grid));
    t.r.push_back(r);
    t.hawking.push_back(hawking_mass(d));
    t.closed_form.push_back(m + eps / (2.0 * r));
    t.max_closed_form_error = std::max(t.max_closed_form_error, std::abs(t.hawking.back() - t.closed_form.back()));
  }
  for (std::size_t k = 1; k < t.r.size(); ++k) {
    const double step = (t.hawking[k] - t.hawking[k - 1]) * (t.r[k] > t.r[k - 1] ? 1.0 : -1.0);
    if (step < -1e-12) t.non_decreasing = false;
    if (step > 1e-12) t.non_increasing = false;
  }
  return t;
}

}  // namespace qlm
