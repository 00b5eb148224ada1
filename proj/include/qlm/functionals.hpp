#pragma once

#include <numbers>
#include <optional>
#include <sstream>

#include "qlm/embedding.hpp"

namespace qlm {

/// Physical data (sigma, |H|, alpha_H) of a spacelike 2-surface.
struct SurfaceData {
  Metric2 sigma;
  ScalarField H_norm;
  OneForm alpha_H;

  SurfaceData() = default;
  SurfaceData(Metric2 s, ScalarField h, OneForm a)
      : sigma(std::move(s)), H_norm(std::move(h)), alpha_H(std::move(a)) {
    validate();
  }

  const GridPtr& grid() const { return sigma.grid(); }

  void validate() const {
    detail::require_same_grid(sigma.grid(), H_norm.grid, "SurfaceData");
    detail::require_same_grid(sigma.grid(), alpha_H.grid, "SurfaceData");
    const auto& g = *sigma.grid();
    for (int i = 0; i < g.n_theta(); ++i)
      for (int j = 0; j < g.n_phi(); ++j) {
        const double h = H_norm.values(i, j);
        if (!(h > 0.0) || !std::isfinite(h)) {
          std::ostringstream os;
          os << "SurfaceData: |H| = " << h << " is not positive at node (" << i << ", " << j << ")";
          throw PreconditionError(os.str(), static_cast<long>(i) * g.n_phi() + j);
        }
        if (!std::isfinite(alpha_H.t(i, j)) || !std::isfinite(alpha_H.p(i, j))) {
          std::ostringstream os;
          os << "SurfaceData: alpha_H not finite at node (" << i << ", " << j << ")";
          throw PreconditionError(os.str(), static_cast<long>(i) * g.n_phi() + j);
        }
      }
  }
};

/// tau = -<X, T0> with T0 = (1, 0, 0, 0).
struct TimeFunction {
  ScalarField tau;

  static TimeFunction zero(const GridPtr& g) { return {ScalarField::zero(g)}; }
  /// tau minus its round-measure mean.
  TimeFunction mean_removed() const { return {tau + (-round_mean(tau))}; }
};

struct EnergyBreakdown {
  double reference_term = 0.0;  // (1/8pi) int H_hat dA_sigma_hat
  double physical_term = 0.0;
  double energy = 0.0;          // reference_term - physical_term
  ScalarField theta;
  std::optional<ScalarField> rho;
  double isometry_residual = 0.0;
};

namespace detail {
constexpr double inv_8pi = 1.0 / (8.0 * std::numbers::pi);
constexpr double inv_16pi = 1.0 / (16.0 * std::numbers::pi);

inline WeylOptions tight_weyl() {
  WeylOptions o;
  o.tol = 1e-11;
  return o;
}
}  // namespace detail

inline double hawking_mass(const SurfaceData& d) {
  const double a = area(d.sigma);
  return std::sqrt(a * detail::inv_16pi) * (1.0 - detail::inv_16pi * integrate(d.sigma, d.H_norm * d.H_norm));
}

/// Mean curvature H0 of the R^3 embedding of sigma, on the sigma grid.
inline ScalarField reference_mean_curvature(const Metric2& sigma, WeylOptions opts = detail::tight_weyl()) {
  return extract_geometry(solve_weyl(sigma, opts)).H_hat;
}

inline double byly_mass(const SurfaceData& d, WeylOptions opts = detail::tight_weyl()) {
  const ScalarField h0 = reference_mean_curvature(d.sigma, opts);
  return detail::inv_8pi * (integrate(d.sigma, h0) - integrate(d.sigma, d.H_norm));
}

/// sinh^{-1}(-Delta tau / (|H| sqrt(1 + |grad tau|^2))).
inline ScalarField theta_field(const SurfaceData& d, const TimeFunction& t) {
  const ScalarField lap = laplacian(d.sigma, t.tau);
  const Array root = (1.0 + norm_sq(d.sigma, gradient(t.tau)).values).sqrt();
  return {d.grid(), (-lap.values / (d.H_norm.values * root)).asinh()};
}

/// Physical surface Hamiltonian density with boost angle phi:
/// sqrt(1+|grad tau|^2) cosh(phi) |H| - <grad tau, grad phi> - alpha_H(grad tau).
inline ScalarField physical_density(const SurfaceData& d, const TimeFunction& t, const ScalarField& phi) {
  const OneForm dt = gradient(t.tau);
  const Array root = (1.0 + norm_sq(d.sigma, dt).values).sqrt();
  return {d.grid(), root * phi.values.cosh() * d.H_norm.values - inner(d.sigma, dt, gradient(phi)).values -
                        inner(d.sigma, d.alpha_H, dt).values};
}

/// (1/8pi) times the integral of physical_density against dA_sigma.
inline double gauge_functional(const SurfaceData& d, const TimeFunction& t, const ScalarField& phi) {
  return detail::inv_8pi * integrate(d.sigma, physical_density(d, t, phi));
}

/// -(H_hat sigma_hat^{ab} - h_hat^{ab}) nabla_a nabla_b tau / sqrt(1+|grad tau|^2)
///   + div_sigma(grad tau cosh(theta) |H| / sqrt(1+|grad tau|^2) - grad theta - alpha_H)
inline ScalarField el_residual_from(const SurfaceData& d, const TimeFunction& t, const Metric2& sigma_hat,
                                    const EmbeddedGeometry& geo, const ScalarField& theta) {
  const OneForm dt = gradient(t.tau);
  const Array root = (1.0 + norm_sq(d.sigma, dt).values).sqrt();
  const SymmetricTensor hess = covariant_hessian(d.sigma, t.tau);
  const ScalarField contracted =
      geo.H_hat * trace(sigma_hat, hess) - double_contraction(sigma_hat, geo.h_hat, hess);
  const ScalarField coef{d.grid(), theta.values.cosh() * d.H_norm.values / root};
  const OneForm w = coef * dt - gradient(theta) - d.alpha_H;
  return {d.grid(), -contracted.values / root + divergence(d.sigma, w).values};
}

/// Evaluates E(data, tau) and its Euler-Lagrange residual. Keeps a Weyl
/// solver and the previous embedding so that nearby tau reuse work.
class EnergyEvaluator {
 public:
  explicit EnergyEvaluator(GridPtr grid, WeylOptions opts = detail::tight_weyl())
      : solver_(std::move(grid), opts) {}

  WeylSolver& solver() { return solver_; }

  EmbeddingR3 embed(const Metric2& sigma_hat) {
    EmbeddingR3 x = last_ ? solver_.solve(sigma_hat, *last_) : solver_.solve(sigma_hat);
    last_ = x;
    return x;
  }

  struct Evaluation {
    EnergyBreakdown breakdown;
    ScalarField el;
    EmbeddingR3 embedding;
    EmbeddedGeometry geometry;
  };

  Evaluation evaluate(const SurfaceData& d, const TimeFunction& t, bool want_el = true, bool want_rho = false) {
    detail::require_same_grid(d.grid(), t.tau.grid, "wang_yau_energy");
    const Metric2 sigma_hat = metric_add_dtau(d.sigma, t.tau);
    EmbeddingR3 x = embed(sigma_hat);
    EmbeddedGeometry geo = extract_geometry(x);
    EnergyBreakdown b;
    b.isometry_residual = x.residual;
    b.reference_term = detail::inv_8pi * integrate(sigma_hat, geo.H_hat);
    b.theta = theta_field(d, t);
    b.physical_term = gauge_functional(d, t, b.theta);
    b.energy = b.reference_term - b.physical_term;
    if (want_rho) b.rho = rho_from(d, t, x);
    ScalarField el = want_el ? el_residual_from(d, t, sigma_hat, geo, b.theta) : ScalarField{};
    return {std::move(b), std::move(el), std::move(x), std::move(geo)};
  }

  EnergyBreakdown energy(const SurfaceData& d, const TimeFunction& t, bool want_rho = false) {
    return evaluate(d, t, false, want_rho).breakdown;
  }
  ScalarField el_residual(const SurfaceData& d, const TimeFunction& t) { return evaluate(d, t, true).el; }

  static ScalarField rho_from(const SurfaceData& d, const TimeFunction& t, const EmbeddingR3& x) {
    const GraphEmbedding ge = graph_embedding_from(d.sigma, t.tau, x);
    Eigen::Index i, j;
    const double worst = ge.H0_norm_sq.values.minCoeff(&i, &j);
    if (!(worst > 0.0)) {
      std::ostringstream os;
      os << "mass_density_rho: reference mean curvature not spacelike (|H0|^2 = " << worst << ") at node ("
         << i << ", " << j << ")";
      throw GeometryError(os.str(), static_cast<long>(i) * d.grid()->n_phi() + j);
    }
    const Array g2 = 1.0 + norm_sq(d.sigma, gradient(t.tau)).values;
    const Array lap2 = ge.laplacian[0].values.square() / g2;
    return {d.grid(), ((ge.H0_norm_sq.values + lap2).sqrt() - (d.H_norm.values.square() + lap2).sqrt()) / g2.sqrt()};
  }

 private:
  WeylSolver solver_;
  std::optional<EmbeddingR3> last_;
};

inline EnergyBreakdown wang_yau_energy(const SurfaceData& d, const TimeFunction& t,
                                       WeylOptions opts = detail::tight_weyl()) {
  EnergyEvaluator ev(d.grid(), opts);
  return ev.energy(d, t);
}

inline ScalarField el_residual(const SurfaceData& d, const TimeFunction& t, WeylOptions opts = detail::tight_weyl()) {
  EnergyEvaluator ev(d.grid(), opts);
  return ev.el_residual(d, t);
}

inline ScalarField mass_density_rho(const SurfaceData& d, const TimeFunction& t,
                                    WeylOptions opts = detail::tight_weyl()) {
  return EnergyEvaluator::rho_from(d, t, solve_weyl(metric_add_dtau(d.sigma, t.tau), opts));
}

/// Node-wise difference H_hat sqrt(1+|grad tau|^2) - physical_density(theta);
/// vanishes when the data come from a surface in Minkowski space and tau is
/// its own time function.
inline ScalarField conservation_defect(const SurfaceData& d, const TimeFunction& t,
                                       const EnergyEvaluator::Evaluation& ev) {
  const Array root = (1.0 + norm_sq(d.sigma, gradient(t.tau)).values).sqrt();
  return {d.grid(), ev.geometry.H_hat.values * root - physical_density(d, t, ev.breakdown.theta).values};
}

/// First variation of the total mean curvature of the R^3 embedding of
/// sigma_hat in direction delta (covariant components):
///   -(1/2) int (h_ab - H sigma_ab) delta^{ab} dA,
/// with delta^{ab} = sigma_hat^{ac} sigma_hat^{bd} delta_cd.
inline double variation_total_mean_curvature(const Metric2& sigma_hat, const SymmetricTensor& delta,
                                             const EmbeddedGeometry& geo) {
  const SymmetricTensor s = sigma_hat.tensor();
  const SymmetricTensor a{s.grid, geo.h_hat.tt - geo.H_hat.values * s.tt, geo.h_hat.tp - geo.H_hat.values * s.tp,
                          geo.h_hat.pp - geo.H_hat.values * s.pp};
  return -0.5 * integrate(sigma_hat, double_contraction(sigma_hat, a, delta));
}

inline double variation_total_mean_curvature(const Metric2& sigma_hat, const SymmetricTensor& delta,
                                             WeylOptions opts = detail::tight_weyl()) {
  return variation_total_mean_curvature(sigma_hat, delta, extract_geometry(solve_weyl(sigma_hat, opts)));
}

}  // namespace qlm
