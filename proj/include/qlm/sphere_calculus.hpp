#pragma once

#include <array>
#include <span>

#include "qlm/fields.hpp"

namespace qlm {

/// Integral of f against the area form of sigma.
inline double integrate(const Metric2& sigma, const ScalarField& f) {
  detail::require_same_grid(sigma.grid(), f.grid, "integrate");
  const auto& g = *sigma.grid();
  const Array density = sigma.sqrt_det() / g.rows(g.sin_theta());
  return (g.quad_weights() * density * f.values).sum();
}

/// Integral against the round unit-sphere measure.
inline double integrate_round(const ScalarField& f) {
  return (f.grid->quad_weights() * f.values).sum();
}

inline double area(const Metric2& sigma) {
  return integrate(sigma, ScalarField::constant(sigma.grid(), 1.0));
}

/// Round-measure mean of f.
inline double round_mean(const ScalarField& f) {
  return integrate_round(f) / (4.0 * std::numbers::pi);
}

/// df; the metric is accepted for interface symmetry with the other operators.
inline OneForm gradient(const ScalarField& f) {
  const auto& g = *f.grid;
  return {f.grid, g.d_theta(f.values, Parity::even), g.d_phi(f.values)};
}
inline OneForm gradient(const Metric2& sigma, const ScalarField& f) {
  detail::require_same_grid(sigma.grid(), f.grid, "gradient");
  return gradient(f);
}

/// sigma^{ab} omega_b.
inline VectorField raise(const Metric2& sigma, const OneForm& w) {
  detail::require_same_grid(sigma.grid(), w.grid, "raise");
  return {w.grid, sigma.inv_tt() * w.t + sigma.inv_tp() * w.p,
          sigma.inv_tp() * w.t + sigma.inv_pp() * w.p};
}

/// Raised-index gradient sigma^{ab} d_b f.
inline VectorField gradient_raised(const Metric2& sigma, const ScalarField& f) {
  return raise(sigma, gradient(sigma, f));
}

/// sigma^{ab} u_a w_b pointwise.
inline ScalarField inner(const Metric2& sigma, const OneForm& u, const OneForm& w) {
  detail::require_same_grid(sigma.grid(), u.grid, "inner");
  detail::require_same_grid(u.grid, w.grid, "inner");
  return {u.grid, sigma.inv_tt() * u.t * w.t + sigma.inv_tp() * (u.t * w.p + u.p * w.t) +
                      sigma.inv_pp() * u.p * w.p};
}

inline ScalarField norm_sq(const Metric2& sigma, const OneForm& u) { return inner(sigma, u, u); }

/// div_sigma omega = (1/sqrt det) d_a (sqrt det sigma^{ab} omega_b).
inline ScalarField divergence(const Metric2& sigma, const OneForm& w) {
  detail::require_same_grid(sigma.grid(), w.grid, "divergence");
  const auto& g = *sigma.grid();
  const Array root = sigma.sqrt_det();
  const VectorField v = raise(sigma, w);
  // (root V^theta, root V^phi) are the (phi, theta) components of a smooth
  // one-form up to sign, hence parities even and odd respectively.
  const Array flux_t = root * v.t;
  const Array flux_p = root * v.p;
  return {w.grid, (g.d_theta(flux_t, Parity::even) + g.d_phi(flux_p)) / root};
}

/// Laplace-Beltrami operator; defined as divergence of the gradient.
inline ScalarField laplacian(const Metric2& sigma, const ScalarField& f) {
  return divergence(sigma, gradient(sigma, f));
}

struct MetricDerivatives {
  Array E_t, E_p, F_t, F_p, G_t, G_p;
};

inline MetricDerivatives metric_derivatives(const Metric2& sigma) {
  const auto& g = *sigma.grid();
  return {g.d_theta(sigma.tt(), Parity::even), g.d_phi(sigma.tt()),
          g.d_theta(sigma.tp(), Parity::odd),  g.d_phi(sigma.tp()),
          g.d_theta(sigma.pp(), Parity::even), g.d_phi(sigma.pp())};
}

/// Intrinsic Gauss curvature from the first-derivative form
///   K = (1/W) [ d_phi(W Gamma^phi_tt / E) - d_theta(W Gamma^phi_tp / E) ],
/// W = sqrt(EG - F^2). Only one division by sin(theta) survives per factor,
/// which keeps the near-pole nodes well conditioned.
inline ScalarField gauss_curvature(const Metric2& sigma) {
  const auto& g = *sigma.grid();
  const Array& E = sigma.tt();
  const Array& F = sigma.tp();
  const Array& G = sigma.pp();
  const MetricDerivatives d = metric_derivatives(sigma);
  const Array W = sigma.sqrt_det();
  const Array q1 = (2.0 * E * d.F_t - E * d.E_p - F * d.E_t) / (2.0 * W * E);  // odd
  const Array q2 = (E * d.G_t - F * d.E_p) / (2.0 * W * E);                    // even
  return {sigma.grid(), (g.d_phi(q1) - g.d_theta(q2, Parity::even)) / W};
}

/// sigma + d tau (x) d tau.
inline Metric2 metric_add_dtau(const Metric2& sigma, const ScalarField& tau) {
  detail::require_same_grid(sigma.grid(), tau.grid, "metric_add_dtau");
  const OneForm dt = gradient(tau);
  return {sigma.grid(), sigma.tt() + dt.t * dt.t, sigma.tp() + dt.t * dt.p,
          sigma.pp() + dt.p * dt.p};
}

/// Covariant Hessian nabla_a nabla_b f with respect to sigma.
inline SymmetricTensor covariant_hessian(const Metric2& sigma, const ScalarField& f) {
  detail::require_same_grid(sigma.grid(), f.grid, "covariant_hessian");
  const auto& g = *sigma.grid();
  const Array f_t = g.d_theta(f.values, Parity::even);
  const Array f_p = g.d_phi(f.values);
  const Array f_tt = g.d_theta(f_t, Parity::odd);
  const Array f_tp = g.d_phi(f_t);
  const Array f_pp = g.d_phi(f_p);
  const VectorField v = raise(sigma, OneForm{f.grid, f_t, f_p});
  const MetricDerivatives d = metric_derivatives(sigma);
  // Christoffel symbols of the first kind Gamma_{c,ab}.
  const Array t_tt = 0.5 * d.E_t, t_tp = 0.5 * d.E_p, t_pp = d.F_p - 0.5 * d.G_t;
  const Array p_tt = d.F_t - 0.5 * d.E_p, p_tp = 0.5 * d.G_t, p_pp = 0.5 * d.G_p;
  return {f.grid, f_tt - t_tt * v.t - p_tt * v.p, f_tp - t_tp * v.t - p_tp * v.p,
          f_pp - t_pp * v.t - p_pp * v.p};
}

/// sigma^{ac} sigma^{bd} A_ab B_cd for symmetric A, B.
inline ScalarField double_contraction(const Metric2& sigma, const SymmetricTensor& A, const SymmetricTensor& B) {
  const Array it = sigma.inv_tt(), ix = sigma.inv_tp(), ip = sigma.inv_pp();
  // P = sigma^{-1} A, Q = sigma^{-1} B as 2x2 matrices; result is tr(P Q).
  const Array p_tt = it * A.tt + ix * A.tp, p_tp = it * A.tp + ix * A.pp;
  const Array p_pt = ix * A.tt + ip * A.tp, p_pp = ix * A.tp + ip * A.pp;
  const Array q_tt = it * B.tt + ix * B.tp, q_tp = it * B.tp + ix * B.pp;
  const Array q_pt = ix * B.tt + ip * B.tp, q_pp = ix * B.tp + ip * B.pp;
  return {sigma.grid(), p_tt * q_tt + p_tp * q_pt + p_pt * q_tp + p_pp * q_pp};
}

/// sigma^{ab} A_ab.
inline ScalarField trace(const Metric2& sigma, const SymmetricTensor& A) {
  return {sigma.grid(), sigma.inv_tt() * A.tt + 2.0 * sigma.inv_tp() * A.tp + sigma.inv_pp() * A.pp};
}

/// Pull back a flat ambient metric eta = diag(signs) through coordinate
/// functions X^mu: result_ab = sum_mu signs[mu] d_a X^mu d_b X^mu.
inline SymmetricTensor pullback(std::span<const ScalarField> X, std::span<const double> signs) {
  if (X.empty() || X.size() != signs.size()) throw ShapeError("pullback: size mismatch");
  const GridPtr& grid = X[0].grid;
  SymmetricTensor out = SymmetricTensor::zero(grid);
  for (std::size_t mu = 0; mu < X.size(); ++mu) {
    detail::require_same_grid(grid, X[mu].grid, "pullback");
    const OneForm d = gradient(X[mu]);
    out.tt += signs[mu] * d.t * d.t;
    out.tp += signs[mu] * d.t * d.p;
    out.pp += signs[mu] * d.p * d.p;
  }
  return out;
}

/// Fraction of spectral energy in the top third of the (Legendre degree,
/// Fourier order) range for a component of the given parity. Used as a
/// smoothness proxy for catalog metrics.
inline double spectral_tail_fraction(const GridPtr& grid, const Array& values, Parity parity) {
  const auto& g = *grid;
  const int nt = g.n_theta(), np = g.n_phi();
  const int m_max = np / 2;
  // Legendre coefficients via Gauss quadrature of P_l(x) values.
  Eigen::MatrixXd pl(nt, nt);
  for (int i = 0; i < nt; ++i) {
    double p0 = 1.0, p1 = g.cos_theta()(i);
    pl(i, 0) = 1.0;
    if (nt > 1) pl(i, 1) = p1;
    for (int l = 2; l < nt; ++l) {
      const double p2 = ((2.0 * l - 1.0) * g.cos_theta()(i) * p1 - (l - 1.0) * p0) / l;
      p0 = p1;
      p1 = p2;
      pl(i, l) = p2;
    }
  }
  double total = 0.0, tail = 0.0;
  for (int m = 0; m <= m_max; ++m) {
    Eigen::VectorXd re(nt), im(nt);
    for (int i = 0; i < nt; ++i) {
      double a = 0.0, b = 0.0;
      for (int j = 0; j < np; ++j) {
        a += values(i, j) * std::cos(m * g.phi()(j));
        b += values(i, j) * std::sin(m * g.phi()(j));
      }
      re(i) = a / np;
      im(i) = b / np;
    }
    const bool sin_factor = (parity == Parity::even) == (m % 2 == 1);
    for (int l = 0; l < nt; ++l) {
      double cr = 0.0, ci = 0.0;
      for (int i = 0; i < nt; ++i) {
        const double scale = sin_factor ? 1.0 / g.sin_theta()(i) : 1.0;
        cr += g.gl_weights()(i) * pl(i, l) * re(i) * scale;
        ci += g.gl_weights()(i) * pl(i, l) * im(i) * scale;
      }
      const double e = (cr * cr + ci * ci) * (2.0 * l + 1.0) / 2.0;
      total += e;
      if (3 * l >= 2 * nt || 3 * m >= 2 * m_max) tail += e;
    }
  }
  return total > 0.0 ? tail / total : 0.0;
}

}  // namespace qlm
