#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "qlm/sphere_calculus.hpp"

namespace qlm {

using RadialProfile = std::function<double(double)>;

/// Spherically symmetric initial data on [r0, r1]:
///   g = g_rr dr^2 + r^2 dOmega^2,  p = p_rr dr^2 + p_tang r^2 dOmega^2.
struct RadialInitialData {
  double r0 = 1.0, r1 = 10.0;
  RadialProfile g_rr, dg_rr, p_rr, p_tang;

  void validate() const {
    if (!(r0 > 0.0 && r1 > r0)) throw DomainError("RadialInitialData: need 0 < r0 < r1");
    if (!g_rr || !dg_rr || !p_rr || !p_tang) throw DomainError("RadialInitialData: missing profile");
    for (int k = 0; k <= 64; ++k) {
      const double r = r0 + (r1 - r0) * k / 64.0;
      const double a = g_rr(r);
      if (!(a > 0.0) || !std::isfinite(a)) {
        std::ostringstream os;
        os << "RadialInitialData: g_rr = " << a << " not positive at r = " << r;
        throw DomainError(os.str());
      }
      if (!std::isfinite(dg_rr(r)) || !std::isfinite(p_rr(r)) || !std::isfinite(p_tang(r))) {
        std::ostringstream os;
        os << "RadialInitialData: profile not finite at r = " << r;
        throw DomainError(os.str());
      }
    }
  }

  static RadialInitialData flat(double r0, double r1) {
    return {r0, r1, [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
            [](double) { return 0.0; }};
  }
  /// The slice t = sqrt(1 + r^2) of Minkowski space; umbilic with p = g.
  static RadialInitialData hyperboloid(double r0, double r1) {
    return {r0, r1, [](double r) { return 1.0 / (1.0 + r * r); },
            [](double r) { return -2.0 * r / ((1.0 + r * r) * (1.0 + r * r)); },
            [](double r) { return 1.0 / (1.0 + r * r); }, [](double) { return 1.0; }};
  }
  /// Time-symmetric Schwarzschild slice in areal radius.
  static RadialInitialData schwarzschild(double m, double r0, double r1) {
    if (!(r0 > 2.0 * m)) throw DomainError("RadialInitialData::schwarzschild: r0 must exceed 2m");
    return {r0, r1, [m](double r) { return 1.0 / (1.0 - 2.0 * m / r); },
            [m](double r) { return -2.0 * m / ((r - 2.0 * m) * (r - 2.0 * m)); }, [](double) { return 0.0; },
            [](double) { return 0.0; }};
  }
};

/// Value and first two derivatives of a radial function at r.
struct RadialJet {
  double f = 0.0, df = 0.0, d2f = 0.0;
};

/// Jang operator for f = f(r):
///   (1/(A W)) ((f'' - A' f'/(2A)) / sqrt(W) - p_rr) + 2 (f'/(r A sqrt(W)) - p_tang),
/// A = g_rr, W = 1 + f'^2 / A.
inline double jang_operator_radial(const RadialInitialData& d, double r, const RadialJet& j) {
  const double A = d.g_rr(r);
  const double W = 1.0 + j.df * j.df / A;
  const double sw = std::sqrt(W);
  return ((j.d2f - 0.5 * d.dg_rr(r) / A * j.df) / sw - d.p_rr(r)) / (A * W) +
         2.0 * (j.df / (r * A * sw) - d.p_tang(r));
}

/// f'' making the Jang operator vanish, given f'.
inline double jang_second_derivative(const RadialInitialData& d, double r, double df) {
  const double A = d.g_rr(r);
  const double W = 1.0 + df * df / A;
  const double sw = std::sqrt(W);
  const double tang = 2.0 * (df / (r * A * sw) - d.p_tang(r));
  return 0.5 * d.dg_rr(r) / A * df + sw * (d.p_rr(r) - A * W * tang);
}

/// Piecewise quintic Hermite interpolant through (r_k, f, f', f'').
class RadialFunction {
 public:
  RadialFunction() = default;
  RadialFunction(std::vector<double> r, std::vector<RadialJet> jets) : r_(std::move(r)), j_(std::move(jets)) {
    if (r_.size() < 2 || r_.size() != j_.size()) throw ShapeError("RadialFunction: need >= 2 matching nodes");
    for (std::size_t k = 1; k < r_.size(); ++k)
      if (!(r_[k] > r_[k - 1])) throw ShapeError("RadialFunction: nodes must increase");
  }
  /// Sample an analytic function and its derivatives on n uniform nodes.
  static RadialFunction sample(double a, double b, int n, const std::function<RadialJet(double)>& fn) {
    std::vector<double> r(n);
    std::vector<RadialJet> j(n);
    for (int k = 0; k < n; ++k) {
      r[k] = a + (b - a) * k / (n - 1);
      j[k] = fn(r[k]);
    }
    return {std::move(r), std::move(j)};
  }

  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }
  const std::vector<double>& nodes() const { return r_; }
  const std::vector<RadialJet>& node_jets() const { return j_; }

  RadialJet operator()(double r) const {
    if (r < r_.front() - 1e-12 || r > r_.back() + 1e-12) {
      std::ostringstream os;
      os << "RadialFunction: r = " << r << " outside [" << r_.front() << ", " << r_.back() << "]";
      throw DomainError(os.str());
    }
    const std::size_t k = std::min<std::size_t>(
        r_.size() - 2, static_cast<std::size_t>(std::upper_bound(r_.begin(), r_.end(), r) - r_.begin()) - 1);
    const double h = r_[k + 1] - r_[k];
    const double s = std::clamp((r - r_[k]) / h, 0.0, 1.0);
    const RadialJet& a = j_[k];
    const RadialJet& b = j_[k + 1];
    // Quintic Hermite basis and its first two derivatives in s.
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double H[6] = {1 - 10 * s3 + 15 * s4 - 6 * s5, s - 6 * s3 + 8 * s4 - 3 * s5,
                         0.5 * (s2 - 3 * s3 + 3 * s4 - s5), 10 * s3 - 15 * s4 + 6 * s5,
                         -4 * s3 + 7 * s4 - 3 * s5,        0.5 * (s3 - 2 * s4 + s5)};
    const double D[6] = {-30 * s2 + 60 * s3 - 30 * s4, 1 - 18 * s2 + 32 * s3 - 15 * s4,
                         0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4), 30 * s2 - 60 * s3 + 30 * s4,
                         -12 * s2 + 28 * s3 - 15 * s4,            0.5 * (3 * s2 - 8 * s3 + 5 * s4)};
    const double DD[6] = {-60 * s + 180 * s2 - 120 * s3, -36 * s + 96 * s2 - 60 * s3,
                          0.5 * (2 - 18 * s + 36 * s2 - 20 * s3), 60 * s - 180 * s2 + 120 * s3,
                          -24 * s + 84 * s2 - 60 * s3,           0.5 * (6 * s - 24 * s2 + 20 * s3)};
    const double c[6] = {a.f, h * a.df, h * h * a.d2f, b.f, h * b.df, h * h * b.d2f};
    RadialJet out;
    for (int q = 0; q < 6; ++q) {
      out.f += H[q] * c[q];
      out.df += D[q] * c[q];
      out.d2f += DD[q] * c[q];
    }
    out.df /= h;
    out.d2f /= h * h;
    return out;
  }

 private:
  std::vector<double> r_;
  std::vector<RadialJet> j_;
};

/// Pointwise Jang residual of f on nodes of a uniform sampling of the domain.
struct RadialResidual {
  std::vector<double> r, value;
  double max_abs() const {
    double m = 0.0;
    for (double v : value) m = std::max(m, std::abs(v));
    return m;
  }
};

inline RadialResidual jang_residual_radial(const RadialInitialData& d, const RadialFunction& f, int samples = 401) {
  d.validate();
  const double a = std::max(d.r0, f.r_min()), b = std::min(d.r1, f.r_max());
  RadialResidual out;
  for (int k = 0; k < samples; ++k) {
    const double r = a + (b - a) * k / (samples - 1);
    out.r.push_back(r);
    out.value.push_back(jang_operator_radial(d, r, f(r)));
  }
  return out;
}

struct JangOptions {
  double far_slope = 0.0;  // f'(r1)
  double tol = 1e-10;
  double blowup_slope = 1e6;
  int max_steps = 200000;
  int min_nodes = 400;  // step cap (r1 - r0) / min_nodes keeps the interpolant's f'' accurate
};

/// Solve the radial Jang equation with f(r0) = tau0 and f'(r1) = far_slope.
/// f' is integrated inward from r1; f follows by quadrature and a shift.
inline RadialFunction solve_jang_radial(const RadialInitialData& d, double tau0, JangOptions opts = {}) {
  namespace ode = boost::numeric::odeint;
  d.validate();
  using State = std::array<double, 2>;  // (f - f(r1), f')
  auto rhs = [&d](const State& y, State& dy, double r) {
    dy[0] = y[1];
    dy[1] = jang_second_derivative(d, r, y[1]);
  };
  auto stepper = ode::make_controlled(opts.tol, opts.tol, ode::runge_kutta_dopri5<State>());
  State y{0.0, opts.far_slope};
  double r = d.r1;
  const double h_max = (d.r1 - d.r0) / opts.min_nodes;
  double dt = -h_max;
  std::vector<double> rs{r};
  std::vector<State> ys{y};
  int steps = 0;
  while (r > d.r0) {
    dt = std::max(dt, -h_max);
    if (r + dt < d.r0) dt = d.r0 - r;
    if (stepper.try_step(rhs, y, r, dt) == ode::fail) {
      if (std::abs(dt) < 1e-12 * d.r1) {
        std::ostringstream os;
        os << "solve_jang_radial: f' blows up near r = " << r << " (|f'| = " << std::abs(y[1])
           << ", step size collapsed)";
        throw ConvergenceError(os.str());
      }
      continue;
    }
    if (!std::isfinite(y[1]) || std::abs(y[1]) > opts.blowup_slope) {
      std::ostringstream os;
      os << "solve_jang_radial: f' blows up near r = " << r << " (|f'| = " << std::abs(y[1]) << ")";
      throw ConvergenceError(os.str());
    }
    rs.push_back(r);
    ys.push_back(y);
    if (++steps > opts.max_steps) throw ConvergenceError("solve_jang_radial: step limit exceeded");
    if (std::abs(r - d.r0) < 1e-14 * d.r1) r = d.r0;
  }
  const double shift = tau0 - ys.back()[0];
  std::vector<double> r_out(rs.rbegin(), rs.rend());
  std::vector<RadialJet> jets;
  for (auto it = ys.rbegin(); it != ys.rend(); ++it) jets.push_back({(*it)[0] + shift, (*it)[1], 0.0});
  r_out.front() = d.r0;
  for (std::size_t k = 0; k < r_out.size(); ++k) jets[k].d2f = jang_second_derivative(d, r_out[k], jets[k].df);
  return {std::move(r_out), std::move(jets)};
}

/// u on [r0, r_max] for the rotationally symmetric scalar-flat metric
/// u^2 dr^2 + r^2 dOmega^2, i.e. u = (1 - 2E/r)^{-1/2}.
struct QuasiSphericalState {
  double r0 = 1.0, r_max = 1e3;
  double boundary_value = 1.0;  // u(r0)
  double energy = 0.0;          // E

  double u(double r) const { return 1.0 / std::sqrt(1.0 - 2.0 * energy / r); }
  /// Mean curvature of the coordinate sphere in the flat metric.
  static double flat_mean_curvature(double r) { return 2.0 / r; }
};

inline QuasiSphericalState shi_tam_flow(double r0, double u0, double r_max = 1e3) {
  if (!(r0 > 0.0) || !(r_max > r0)) throw DomainError("shi_tam_flow: need 0 < r0 < r_max");
  if (!(u0 > 0.0) || !std::isfinite(u0)) throw DomainError("shi_tam_flow: u0 must be positive");
  QuasiSphericalState s{r0, r_max, u0, 0.5 * r0 * (1.0 - 1.0 / (u0 * u0))};
  if (!(s.energy < 0.5 * r0)) throw DomainError("shi_tam_flow: E >= r0/2, horizon forms");
  return s;
}

/// Direct integration of the reduced scalar-flat equation u' = u (1 - u^2) / (2r).
inline double shi_tam_integrate(const QuasiSphericalState& s, double r, double tol = 1e-12) {
  namespace ode = boost::numeric::odeint;
  if (r < s.r0) throw DomainError("shi_tam_integrate: r below r0");
  double u = s.boundary_value;
  ode::integrate_adaptive(ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<double>()),
                          [](const double& x, double& dx, double rr) { dx = x * (1.0 - x * x) / (2.0 * rr); }, u,
                          s.r0, r, 1e-3 * s.r0);
  return u;
}

struct EOfRTable {
  std::vector<double> r, e;
  bool non_increasing = true;
  bool strictly_decreasing = true;
  double limit_gap = 0.0;  // |e(r_max) - E|
};

/// e(r) = (1/8pi) int (H_r - H_r/u) dA over the coordinate sphere = r (1 - 1/u).
inline EOfRTable e_of_r(const QuasiSphericalState& s, int samples = 200) {
  EOfRTable t;
  for (int k = 0; k < samples; ++k) {
    // Geometric spacing resolves the O(1/r) approach to the limit.
    const double r = s.r0 * std::pow(s.r_max / s.r0, static_cast<double>(k) / (samples - 1));
    t.r.push_back(r);
    t.e.push_back(r * (1.0 - 1.0 / s.u(r)));
  }
  for (std::size_t k = 1; k < t.e.size(); ++k) {
    if (t.e[k] > t.e[k - 1]) t.non_increasing = false;
    if (!(t.e[k] < t.e[k - 1])) t.strictly_decreasing = false;
  }
  t.limit_gap = std::abs(t.e.back() - s.energy);
  const double bound = 2.0 * s.energy * s.energy / s.r_max + 1e-10;
  if (!t.non_increasing) throw GeometryError("e_of_r: table is not monotone");
  if (!(t.limit_gap < bound)) {
    std::ostringstream os;
    os << "e_of_r: |e(r_max) - E| = " << t.limit_gap << " exceeds " << bound;
    throw GeometryError(os.str());
  }
  return t;
}

/// Cartesian metric components g_ij(x); indices i, j in 0..2.
using CartesianMetric = std::function<std::array<std::array<double, 3>, 3>(const std::array<double, 3>&)>;

/// (1/16pi) int_{S_r} (g_ij,j - g_jj,i) nu^i over the coordinate sphere of
/// radius r, with derivatives by fourth-order central differences.
inline double adm_energy_flux(const CartesianMetric& g, double r, const GridPtr& grid) {
  const auto& gr = *grid;
  const double h = 1e-2 * r;
  double total = 0.0;
  for (int i = 0; i < gr.n_theta(); ++i)
    for (int j = 0; j < gr.n_phi(); ++j) {
      const double st = gr.sin_theta()(i), ct = gr.cos_theta()(i);
      const std::array<double, 3> n{st * std::cos(gr.phi()(j)), st * std::sin(gr.phi()(j)), ct};
      // dg[k][a][b] = d_k g_ab
      double dg[3][3][3];
      for (int k = 0; k < 3; ++k) {
        auto at = [&](double s) {
          std::array<double, 3> x{r * n[0], r * n[1], r * n[2]};
          x[k] += s;
          return g(x);
        };
        const auto m2 = at(-2 * h), m1 = at(-h), p1 = at(h), p2 = at(2 * h);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            dg[k][a][b] = (m2[a][b] - 8.0 * m1[a][b] + 8.0 * p1[a][b] - p2[a][b]) / (12.0 * h);
      }
      double integrand = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) integrand += (dg[b][a][b] - dg[a][b][b]) * n[a];
      total += gr.quad_weights()(i, j) * integrand;
    }
  return total * r * r / (16.0 * std::numbers::pi);
}

struct AdmEstimate {
  double radius = 0.0;
  double at_r = 0.0;          // flux at r
  double at_2r = 0.0;         // flux at 2r
  double extrapolated = 0.0;  // 2 E(2r) - E(r), removes the O(1/r) term
};

/// ADM energy of u^2 dr^2 + r^2 dOmega^2 in the Cartesian chart
/// g_ij = delta_ij + (u^2 - 1) x_i x_j / r^2.
inline AdmEstimate adm_energy_radial(const QuasiSphericalState& s, double r, const GridPtr& grid) {
  const CartesianMetric g = [&s](const std::array<double, 3>& x) {
    const double rr2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double u = s.u(std::sqrt(rr2));
    const double a = (u * u - 1.0) / rr2;
    std::array<std::array<double, 3>, 3> m{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m[i][j] = (i == j ? 1.0 : 0.0) + a * x[i] * x[j];
    return m;
  };
  AdmEstimate e;
  e.radius = r;
  e.at_r = adm_energy_flux(g, r, grid);
  e.at_2r = adm_energy_flux(g, 2.0 * r, grid);
  e.extrapolated = 2.0 * e.at_2r - e.at_r;
  return e;
}

struct ShiTamPositivityReport {
  double r0 = 0.0, k = 0.0, u0 = 0.0;
  double brown_york = 0.0;  // (1/8pi) int (H_hat - k) = r0 - k r0^2 / 2
  double energy = 0.0;      // E of the extension
  double e_rmax = 0.0;
  bool hypotheses_hold = false;  // k <= 2/r0
  bool chain_holds = false;      // brown_york >= e(r_max) >= 0
};

inline ShiTamPositivityReport shi_tam_positivity_instance(double r0, double k, double r_max = 1e3) {
  if (!(k > 0.0)) throw DomainError("shi_tam_positivity_instance: k must be positive");
  ShiTamPositivityReport rep;
  rep.r0 = r0;
  rep.k = k;
  rep.u0 = QuasiSphericalState::flat_mean_curvature(r0) / k;
  rep.brown_york = r0 - 0.5 * k * r0 * r0;
  const QuasiSphericalState s = shi_tam_flow(r0, rep.u0, r_max);
  rep.energy = s.energy;
  rep.e_rmax = r_max * (1.0 - 1.0 / s.u(r_max));
  rep.hypotheses_hold = k <= QuasiSphericalState::flat_mean_curvature(r0) * (1.0 + 1e-14);
  rep.chain_holds = rep.brown_york >= rep.e_rmax - 1e-12 && rep.e_rmax >= -1e-12;
  if (rep.hypotheses_hold && !rep.chain_holds) {
    std::ostringstream os;
    os << "shi_tam_positivity_instance: chain fails (Brown-York " << rep.brown_york << ", e(r_max) " << rep.e_rmax
       << ")";
    throw GeometryError(os.str());
  }
  return rep;
}

}  // namespace qlm
