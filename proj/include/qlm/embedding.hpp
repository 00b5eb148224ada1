#pragma once

#include <array>
#include <optional>
#include <sstream>

#include "qlm/harmonics.hpp"
#include "qlm/sphere_calculus.hpp"

namespace qlm {

/// X: S^2 -> R^3 given by three coordinate fields, with the harmonic
/// coefficients it was synthesized from (one column per component).
struct EmbeddingR3 {
  GridPtr grid;
  std::array<ScalarField, 3> X;
  Eigen::MatrixXd coeffs;  // basis.size() x 3; empty when built from values
  int l_max = -1;
  double residual = 0.0;   // isometry residual reported by the solver

  static EmbeddingR3 from_values(std::array<ScalarField, 3> x) {
    EmbeddingR3 e;
    e.grid = x[0].grid;
    e.X = std::move(x);
    return e;
  }

  /// <dX, dX>
  SymmetricTensor induced_tensor() const {
    const std::array<double, 3> signs{1.0, 1.0, 1.0};
    return pullback(std::span<const ScalarField>(X.data(), 3), signs);
  }
  Metric2 induced_metric() const { return Metric2(induced_tensor()); }

  Eigen::Vector3d at(long node) const {
    const int i = static_cast<int>(node / grid->n_phi()), j = static_cast<int>(node % grid->n_phi());
    return {X[0].values(i, j), X[1].values(i, j), X[2].values(i, j)};
  }
};

/// Max over nodes of the frame-scaled difference <dX,dX> - target, relative
/// to the frame-scaled max of the target.
inline double isometry_residual(const EmbeddingR3& e, const Metric2& target) {
  const SymmetricTensor g = e.induced_tensor();
  const SymmetricTensor d{g.grid, g.tt - target.tt(), g.tp - target.tp(), g.pp - target.pp()};
  return Metric2::frame_max_abs(d) / target.frame_max_abs();
}

struct WeylOptions {
  double tol = 1e-8;            // final relative isometry residual
  double stage_tol = 1e-6;      // residual required at intermediate continuation stages
  int l_max = -1;               // -1 selects 2 n_theta / 3
  double initial_step = 0.25;
  double min_step = 1e-4;
  int max_iterations = 25;      // Gauss-Newton iterations per stage
  /// Rotation (axis-angle vector) applied to the starting sphere.
  Eigen::Vector3d start_rotation = Eigen::Vector3d::Zero();
  /// Adds t (1 - t) detour * (d psi)^2 to the homotopy, psi a fixed l = 2 shape.
  double detour = 0.0;
};

struct WeylStats {
  int factorizations = 0;
  int iterations = 0;
  int stages = 0;
};

/// Gauss-Newton solver for <dX, dX> = target on the sphere grid.
///
/// The least-squares residual is measured in the round orthonormal frame, so
/// tp and pp components carry weights 2 / sin^2 and 1 / sin^4. A factored
/// normal matrix is kept between calls: consecutive solves on nearby targets
/// run chord iterations and only refactor when convergence slows.
class WeylSolver {
 public:
  explicit WeylSolver(GridPtr grid, WeylOptions opts = {})
      : grid_(std::move(grid)),
        opts_(opts),
        basis_(grid_, opts.l_max >= 0 ? opts.l_max : (2 * grid_->n_theta()) / 3) {
    const int nt = grid_->n_theta(), np = grid_->n_phi();
    w_ = grid_->quad_weights();
    const Array s2 = grid_->rows(grid_->sin_theta().cwiseAbs2());
    a_tp_ = 2.0 / s2;
    a_pp_ = 1.0 / (s2 * s2);
    const int L = basis_.l_max();
    cos_q_.resize(np, 2 * L + 1);
    sin_q_.resize(np, 2 * L + 1);
    for (int j = 0; j < np; ++j)
      for (int q = 0; q <= 2 * L; ++q) {
        cos_q_(j, q) = std::cos(q * grid_->phi()(j));
        sin_q_(j, q) = std::sin(q * grid_->phi()(j));
      }
    (void)nt;
  }

  const GridPtr& grid() const { return grid_; }
  const HarmonicBasis& basis() const { return basis_; }
  const WeylOptions& options() const { return opts_; }
  const WeylStats& stats() const { return stats_; }
  void reset_cache() { factored_ = false; }

  /// Continuation from the area-matched round sphere.
  EmbeddingR3 solve(const Metric2& target) {
    check_target(target);
    return continuation(target);
  }

  /// Newton from `guess` (e.g. the solution for a nearby target); falls back
  /// to continuation when that fails.
  EmbeddingR3 solve(const Metric2& target, const EmbeddingR3& guess) {
    check_target(target);
    if (guess.coeffs.rows() == basis_.size()) {
      Eigen::MatrixXd c = guess.coeffs;
      double res = 0.0;
      if (iterate(target, c, opts_.tol, res)) return finish(c, res);
    }
    return continuation(target);
  }

 private:
  struct Tables {
    Eigen::MatrixXd C, S;  // nt x (2L+1) per-row cosine / sine sums
  };
  struct Term {
    const Eigen::MatrixXd* prof;
    int trig;  // 0 cos, 1 sin
    double fac;
  };

  void check_target(const Metric2& target) const {
    detail::require_same_grid(grid_, target.grid(), "solve_weyl");
    const ScalarField K = gauss_curvature(target);
    Eigen::Index i, j;
    const double kmin = K.values.minCoeff(&i, &j);
    if (!(kmin > 0.0)) {
      std::ostringstream os;
      os << "solve_weyl: Gauss curvature " << kmin << " <= 0 at node (" << i << ", " << j
         << "); the Weyl problem needs K > 0";
      throw PreconditionError(os.str(), static_cast<long>(i) * grid_->n_phi() + j);
    }
  }

  EmbeddingR3 finish(const Eigen::MatrixXd& c, double res) const {
    EmbeddingR3 e;
    e.grid = grid_;
    for (int k = 0; k < 3; ++k) e.X[k] = basis_.field(c.col(k));
    e.coeffs = c;
    e.l_max = basis_.l_max();
    e.residual = res;
    return e;
  }

  Eigen::MatrixXd round_start(double r) const {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(basis_.size(), 3);
    const double s = r * std::sqrt(4.0 * std::numbers::pi / 3.0);
    c(basis_.index(1, 1), 0) = s;
    c(basis_.index(1, -1), 1) = s;
    c(basis_.index(1, 0), 2) = s;
    const double angle = opts_.start_rotation.norm();
    if (angle > 0.0) {
      const Eigen::Matrix3d R = Eigen::AngleAxisd(angle, opts_.start_rotation / angle).toRotationMatrix();
      c = c * R.transpose();
    }
    return c;
  }

  EmbeddingR3 continuation(const Metric2& target) {
    const double r = std::sqrt(area(target) / (4.0 * std::numbers::pi));
    const Metric2 start = Metric2::round(grid_, r);
    Array detour_tt, detour_tp, detour_pp;
    if (opts_.detour != 0.0) {
      const ScalarField psi = harmonic_field(grid_, 2, 1, r);
      const OneForm d = gradient(psi);
      detour_tt = opts_.detour * d.t * d.t;
      detour_tp = opts_.detour * d.t * d.p;
      detour_pp = opts_.detour * d.p * d.p;
    }
    auto path = [&](double t) {
      Array tt = (1.0 - t) * start.tt() + t * target.tt();
      Array tp = (1.0 - t) * start.tp() + t * target.tp();
      Array pp = (1.0 - t) * start.pp() + t * target.pp();
      if (opts_.detour != 0.0) {
        const double b = t * (1.0 - t);
        tt += b * detour_tt;
        tp += b * detour_tp;
        pp += b * detour_pp;
      }
      return Metric2(grid_, tt, tp, pp);
    };

    Eigen::MatrixXd c = round_start(r), c_prev = c;
    double t = 0.0, t_prev = -1.0, h = opts_.initial_step, res = 0.0;
    factored_ = false;
    while (t < 1.0) {
      const double t_new = std::min(1.0, t + h);
      Eigen::MatrixXd trial = c;
      if (t_prev >= 0.0) trial += (t_new - t) / (t - t_prev) * (c - c_prev);
      const bool last = (t_new >= 1.0);
      ++stats_.stages;
      if (iterate(path(t_new), trial, last ? opts_.tol : opts_.stage_tol, res)) {
        c_prev = c;
        c = trial;
        t_prev = t;
        t = t_new;
        h *= 1.5;
      } else {
        h *= 0.5;
        if (h < opts_.min_step) {
          std::ostringstream os;
          if (last)
            os << "solve_weyl: final isometry residual " << res << " stays above tol " << opts_.tol
               << " (last stage t = " << t << "; grid may be too coarse for this metric)";
          else
            os << "solve_weyl: continuation stalled at t = " << t << " (step " << h << ", residual " << res
               << ")";
          last_failure_ = finish(c, res);
          throw ConvergenceError(os.str());
        }
      }
    }
    return finish(c, res);
  }

 public:
  /// Iterate of the most recent failed continuation, if any.
  const std::optional<EmbeddingR3>& last_failure() const { return last_failure_; }

 private:
  struct Derivs {
    std::array<Array, 3> t, p;
  };

  Derivs derivs(const Eigen::MatrixXd& c) const {
    Derivs d;
    for (int k = 0; k < 3; ++k) {
      d.t[k] = basis_.synthesize(c.col(k), HarmonicBasis::Deriv::theta);
      d.p[k] = basis_.synthesize(c.col(k), HarmonicBasis::Deriv::phi);
    }
    return d;
  }

  struct Residual {
    Array tt, tp, pp;
    double rel;
  };

  Residual residual(const Derivs& d, const Metric2& target) const {
    Residual r;
    r.tt = d.t[0].square() + d.t[1].square() + d.t[2].square() - target.tt();
    r.tp = d.t[0] * d.p[0] + d.t[1] * d.p[1] + d.t[2] * d.p[2] - target.tp();
    r.pp = d.p[0].square() + d.p[1].square() + d.p[2].square() - target.pp();
    const double m = Metric2::frame_max_abs({grid_, r.tt, r.tp, r.pp});
    r.rel = std::isfinite(m) ? m / target.frame_max_abs() : std::numeric_limits<double>::infinity();
    return r;
  }

  // Gradient of the weighted least-squares objective plus the centroid penalty.
  Eigen::VectorXd rhs(const Derivs& d, const Residual& r, const Eigen::MatrixXd& c) const {
    const int nb = basis_.size();
    Eigen::VectorXd g(3 * nb);
    for (int i = 0; i < 3; ++i) {
      const Array ft = w_ * (2.0 * r.tt * d.t[i] + a_tp_ * r.tp * d.p[i]);
      const Array fp = w_ * (a_tp_ * r.tp * d.t[i] + 2.0 * a_pp_ * r.pp * d.p[i]);
      g.segment(i * nb, nb) = basis_.adjoint(ft, HarmonicBasis::Deriv::theta) +
                              basis_.adjoint(fp, HarmonicBasis::Deriv::phi) +
                              rho_ * centroid_ * centroid_.dot(c.col(i));
    }
    return g;
  }

  Tables tables(const Array& F) const {
    return {F.matrix() * cos_q_, F.matrix() * sin_q_};
  }

  static Eigen::VectorXd trig_sum(const Tables& T, int t1, int m1, int t2, int m2) {
    const int a = m1 + m2, d = m1 - m2;
    auto s_signed = [&](int q) -> Eigen::VectorXd {
      return q >= 0 ? Eigen::VectorXd(T.S.col(q)) : Eigen::VectorXd(-T.S.col(-q));
    };
    if (t1 == 0 && t2 == 0) return 0.5 * (T.C.col(std::abs(d)) + T.C.col(a));
    if (t1 == 1 && t2 == 1) return 0.5 * (T.C.col(std::abs(d)) - T.C.col(a));
    if (t1 == 0) return 0.5 * (T.S.col(a) - s_signed(d));
    return 0.5 * (T.S.col(a) + s_signed(d));
  }

  Term term(const HarmonicBasis::Group& g, bool theta) const {
    const bool is_cos = g.kind == HarmonicBasis::Kind::cos;
    if (theta) return {&basis_.dprofile(g.m), is_cos ? 0 : 1, 1.0};
    if (is_cos) return {&basis_.profile(g.m), 1, -double(g.m)};
    return {&basis_.profile(g.m), 0, double(g.m)};
  }

  void factor(const Derivs& d, const Metric2& target, const Eigen::MatrixXd& c) {
    const int nb = basis_.size();
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(3 * nb, 3 * nb);
    const auto& groups = basis_.groups();
    for (int ci = 0; ci < 3; ++ci)
      for (int cj = ci; cj < 3; ++cj) {
        const Array Ftt = w_ * (4.0 * d.t[ci] * d.t[cj] + a_tp_ * d.p[ci] * d.p[cj]);
        const Array Fpp = w_ * (a_tp_ * d.t[ci] * d.t[cj] + 4.0 * a_pp_ * d.p[ci] * d.p[cj]);
        const Array Ftp = w_ * a_tp_ * d.p[ci] * d.t[cj];
        const Array Fpt = w_ * a_tp_ * d.t[ci] * d.p[cj];
        const std::array<Tables, 4> T{tables(Ftt), tables(Fpp), tables(Ftp), tables(Fpt)};
        const std::array<std::pair<bool, bool>, 4> kinds{
            {{true, true}, {false, false}, {true, false}, {false, true}}};
        for (std::size_t g1 = 0; g1 < groups.size(); ++g1)
          for (std::size_t g2 = (ci == cj ? g1 : 0); g2 < groups.size(); ++g2) {
            const auto& G1 = groups[g1];
            const auto& G2 = groups[g2];
            Eigen::MatrixXd block = Eigen::MatrixXd::Zero(G1.count, G2.count);
            for (int k = 0; k < 4; ++k) {
              const Term a = term(G1, kinds[k].first);
              const Term b = term(G2, kinds[k].second);
              const double fac = a.fac * b.fac;
              if (fac == 0.0) continue;
              const Eigen::VectorXd s = fac * trig_sum(T[k], a.trig, G1.m, b.trig, G2.m);
              block.noalias() += a.prof->transpose() * (s.asDiagonal() * *b.prof);
            }
            N.block(ci * nb + G1.offset, cj * nb + G2.offset, G1.count, G2.count) = block;
          }
      }
    rho_ = N.diagonal().mean();

    // Centroid pin: d_k = integral of Y_k against the target area form.
    const Array density = w_ * target.sqrt_det() / grid_->rows(grid_->sin_theta());
    centroid_ = basis_.adjoint(density);
    centroid_ /= centroid_.norm();
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(3 * nb);
      v.segment(i * nb, nb) = centroid_;
      N.selfadjointView<Eigen::Upper>().rankUpdate(v, rho_);
    }
    // Updates orthogonal to the infinitesimal rotations e_k x X.
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(3 * nb);
      const int a = (k + 1) % 3, b = (k + 2) % 3;
      v.segment(a * nb, nb) = -c.col(b);
      v.segment(b * nb, nb) = c.col(a);
      v /= v.norm();
      N.selfadjointView<Eigen::Upper>().rankUpdate(v, rho_);
    }
    llt_.compute(N);
    if (llt_.info() != Eigen::Success) throw ConvergenceError("solve_weyl: normal matrix not positive definite");
    factored_ = true;
    ++stats_.factorizations;
  }

  // Gauss-Newton / chord iterations on a fixed target. Returns true when the
  // relative residual drops below tol; c holds the best iterate either way.
  bool iterate(const Metric2& target, Eigen::MatrixXd& c, double tol, double& res) {
    Derivs d = derivs(c);
    Residual r = residual(d, target);
    res = r.rel;
    if (res < tol) return true;
    bool fresh = false;
    if (!factored_) {
      factor(d, target, c);
      fresh = true;
    }
    const int nb = basis_.size();
    for (int it = 0; it < opts_.max_iterations; ++it) {
      ++stats_.iterations;
      const Eigen::VectorXd step = -llt_.solve(rhs(d, r, c));
      bool accepted = false;
      for (double alpha : {1.0, 0.5, 0.25}) {
        Eigen::MatrixXd trial = c;
        for (int i = 0; i < 3; ++i) trial.col(i) += alpha * step.segment(i * nb, nb);
        Derivs dt = derivs(trial);
        Residual rt = residual(dt, target);
        if (rt.rel < r.rel) {
          const double ratio = rt.rel / r.rel;
          c = std::move(trial);
          d = std::move(dt);
          r = std::move(rt);
          res = r.rel;
          accepted = true;
          if (res < tol) return true;
          if (ratio > 0.5) {
            factor(d, target, c);
            fresh = true;
          } else {
            fresh = false;
          }
          break;
        }
        if (!fresh) break;  // stale Jacobian: refactor before damping
      }
      if (!accepted) {
        if (fresh) return false;
        factor(d, target, c);
        fresh = true;
      }
    }
    return res < tol;
  }

  GridPtr grid_;
  WeylOptions opts_;
  HarmonicBasis basis_;
  Array w_, a_tp_, a_pp_;
  Eigen::MatrixXd cos_q_, sin_q_;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Upper> llt_;
  Eigen::VectorXd centroid_;
  double rho_ = 1.0;
  bool factored_ = false;
  WeylStats stats_;
  std::optional<EmbeddingR3> last_failure_;
};

inline EmbeddingR3 solve_weyl(const Metric2& target, WeylOptions opts = {}) {
  WeylSolver solver(target.grid(), opts);
  return solver.solve(target);
}

/// Extrinsic geometry of an embedded sphere.
struct EmbeddedGeometry {
  std::array<ScalarField, 3> nu;  // outward unit normal
  ScalarField H_hat;              // mean curvature, positive on convex surfaces
  SymmetricTensor h_hat;          // second fundamental form -<d_a d_b X, nu>
  ScalarField lambda1, lambda2;   // principal curvatures, lambda1 >= lambda2
  Metric2 metric;                 // induced metric used for the traces
};

inline EmbeddedGeometry extract_geometry(const EmbeddingR3& e) {
  const auto& g = *e.grid;
  std::array<Array, 3> xt, xp, xtt, xtp, xpp;
  for (int k = 0; k < 3; ++k) {
    const Array& x = e.X[k].values;
    xt[k] = g.d_theta(x, Parity::even);
    xp[k] = g.d_phi(x);
    xtt[k] = g.d_theta(xt[k], Parity::odd);
    xtp[k] = g.d_phi(xt[k]);
    xpp[k] = g.d_phi(xp[k]);
  }
  std::array<Array, 3> n{xt[1] * xp[2] - xt[2] * xp[1], xt[2] * xp[0] - xt[0] * xp[2],
                         xt[0] * xp[1] - xt[1] * xp[0]};
  const Array len = (n[0].square() + n[1].square() + n[2].square()).sqrt();
  const Array scale = g.rows(g.sin_theta());
  const Array rel = len / scale;
  Eigen::Index bi, bj;
  const double worst = rel.minCoeff(&bi, &bj);
  if (!(worst > 1e-12 * rel.maxCoeff())) {
    std::ostringstream os;
    os << "extract_geometry: degenerate tangent plane at node (" << bi << ", " << bj << ")";
    throw GeometryError(os.str(), static_cast<long>(bi) * g.n_phi() + bj);
  }
  for (auto& c : n) c /= len;

  // Outward: positive flux of X - centroid through the surface.
  Eigen::Vector3d centroid;
  const Array wdens = g.quad_weights() * rel;
  for (int k = 0; k < 3; ++k) centroid(k) = (wdens * e.X[k].values).sum() / wdens.sum();
  double flux = 0.0;
  for (int k = 0; k < 3; ++k) flux += (wdens * (e.X[k].values - centroid(k)) * n[k]).sum();
  if (flux < 0.0)
    for (auto& c : n) c = -c;

  SymmetricTensor h{e.grid, Array::Zero(g.n_theta(), g.n_phi()), Array::Zero(g.n_theta(), g.n_phi()),
                    Array::Zero(g.n_theta(), g.n_phi())};
  for (int k = 0; k < 3; ++k) {
    h.tt -= xtt[k] * n[k];
    h.tp -= xtp[k] * n[k];
    h.pp -= xpp[k] * n[k];
  }
  Metric2 metric = e.induced_metric();
  const Array H = metric.inv_tt() * h.tt + 2.0 * metric.inv_tp() * h.tp + metric.inv_pp() * h.pp;
  const Array Kext = (h.tt * h.pp - h.tp * h.tp) / metric.det();
  const Array disc = (H.square() - 4.0 * Kext).max(0.0).sqrt();
  EmbeddedGeometry out{{ScalarField(e.grid, n[0]), ScalarField(e.grid, n[1]), ScalarField(e.grid, n[2])},
                       ScalarField(e.grid, H),
                       h,
                       ScalarField(e.grid, 0.5 * (H + disc)),
                       ScalarField(e.grid, 0.5 * (H - disc)),
                       std::move(metric)};
  return out;
}

/// |int H - 2 int K <X, nu>| / int H, with K = lambda1 lambda2.
inline double minkowski_identity_residual(const EmbeddingR3& e, const EmbeddedGeometry& geo) {
  ScalarField support = ScalarField::zero(e.grid);
  for (int k = 0; k < 3; ++k) support = support + e.X[k] * geo.nu[k];
  const double total_h = integrate(geo.metric, geo.H_hat);
  const double rhs = 2.0 * integrate(geo.metric, geo.lambda1 * geo.lambda2 * support);
  return std::abs(total_h - rhs) / std::abs(total_h);
}

/// Best rigid motion (rotation R, translation t) minimizing the area-weighted
/// squared distance between R x1 + t and x2, by the Kabsch method.
struct RigidMotion {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

inline RigidMotion optimal_alignment(const EmbeddingR3& x1, const EmbeddingR3& x2, const Metric2& sigma) {
  const auto& g = *x1.grid;
  const Array w = g.quad_weights() * sigma.sqrt_det() / g.rows(g.sin_theta());
  const double W = w.sum();
  Eigen::Vector3d c1, c2;
  for (int k = 0; k < 3; ++k) {
    c1(k) = (w * x1.X[k].values).sum() / W;
    c2(k) = (w * x2.X[k].values).sum() / W;
  }
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      cov(a, b) = (w * (x2.X[a].values - c2(a)) * (x1.X[b].values - c1(b))).sum();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  RigidMotion m;
  m.R = svd.matrixU() * D * svd.matrixV().transpose();
  m.t = c2 - m.R * c1;
  return m;
}

inline EmbeddingR3 apply(const RigidMotion& m, const EmbeddingR3& x) {
  EmbeddingR3 out = x;
  for (int a = 0; a < 3; ++a) {
    Array v = Array::Constant(x.grid->n_theta(), x.grid->n_phi(), m.t(a));
    for (int b = 0; b < 3; ++b) v += m.R(a, b) * x.X[b].values;
    out.X[a] = ScalarField(x.grid, v);
  }
  if (out.coeffs.size() > 0) {
    out.coeffs = x.coeffs * m.R.transpose();
    out.coeffs.row(0) += m.t.transpose() * std::sqrt(4.0 * std::numbers::pi);
  }
  return out;
}

struct HerglotzReport {
  double total_mean_curvature_1 = 0.0;
  double total_mean_curvature_2 = 0.0;
  double mean_curvature_difference = 0.0;  // int H1 - int H2
  double herglotz_rhs = 0.0;               // 2 int det(h1 - h2) <X1, nu1>
  double max_h_difference = 0.0;           // frame-scaled max |h1 - h2|
  double max_position_difference = 0.0;    // after optimal rigid alignment
  bool unique(double tol) const {
    return std::abs(mean_curvature_difference) < tol && std::abs(herglotz_rhs) < tol &&
           max_h_difference < tol;
  }
};

/// Compare two isometric embeddings of the same metric node by node.
inline HerglotzReport herglotz_uniqueness_check(const Metric2& sigma_hat, const EmbeddingR3& x1,
                                                const EmbeddingR3& x2) {
  for (const EmbeddingR3* x : {&x1, &x2}) {
    const double r = isometry_residual(*x, sigma_hat);
    if (!(r < 1e-6)) {
      std::ostringstream os;
      os << "herglotz_uniqueness_check: isometry residual " << r << " exceeds 1e-6";
      throw PreconditionError(os.str());
    }
  }
  const EmbeddedGeometry g1 = extract_geometry(x1), g2 = extract_geometry(x2);
  HerglotzReport rep;
  rep.total_mean_curvature_1 = integrate(sigma_hat, g1.H_hat);
  rep.total_mean_curvature_2 = integrate(sigma_hat, g2.H_hat);
  rep.mean_curvature_difference = rep.total_mean_curvature_1 - rep.total_mean_curvature_2;
  const SymmetricTensor dh{g1.h_hat.grid, g1.h_hat.tt - g2.h_hat.tt, g1.h_hat.tp - g2.h_hat.tp,
                           g1.h_hat.pp - g2.h_hat.pp};
  ScalarField support = ScalarField::zero(x1.grid);
  for (int k = 0; k < 3; ++k) support = support + x1.X[k] * g1.nu[k];
  const ScalarField det_dh{x1.grid, (dh.tt * dh.pp - dh.tp * dh.tp) / sigma_hat.det()};
  rep.herglotz_rhs = 2.0 * integrate(sigma_hat, det_dh * support);
  rep.max_h_difference = Metric2::frame_max_abs(dh);
  const EmbeddingR3 aligned = apply(optimal_alignment(x2, x1, sigma_hat), x2);
  double m = 0.0;
  for (int k = 0; k < 3; ++k) m = std::max(m, (aligned.X[k].values - x1.X[k].values).abs().maxCoeff());
  rep.max_position_difference = m;
  return rep;
}

/// (tau, X) with X an isometric embedding of sigma + d tau (x) d tau, and the
/// Minkowski data of the resulting surface in R^{3,1}.
struct GraphEmbedding {
  std::array<ScalarField, 4> X;          // X^0 = tau, X^1..X^3
  EmbeddingR3 spatial;
  std::array<ScalarField, 4> laplacian;  // Delta_sigma X^mu (the mean curvature vector)
  ScalarField H0_norm_sq;                // -(Delta X^0)^2 + sum (Delta X^i)^2
  double lorentz_residual = 0.0;         // frame-scaled |<dX,dX>_{3,1} - sigma| / |sigma|
};

inline GraphEmbedding graph_embedding_from(const Metric2& sigma, const ScalarField& tau, EmbeddingR3 x) {
  GraphEmbedding ge;
  ge.X = {tau, x.X[0], x.X[1], x.X[2]};
  ge.spatial = std::move(x);
  ScalarField n2 = ScalarField::zero(sigma.grid());
  for (int mu = 0; mu < 4; ++mu) {
    ge.laplacian[mu] = laplacian(sigma, ge.X[mu]);
    const double sign = mu == 0 ? -1.0 : 1.0;
    n2 = n2 + sign * (ge.laplacian[mu] * ge.laplacian[mu]);
  }
  ge.H0_norm_sq = n2;
  const std::array<double, 4> eta{-1.0, 1.0, 1.0, 1.0};
  const SymmetricTensor g = pullback(std::span<const ScalarField>(ge.X.data(), 4), eta);
  const SymmetricTensor d{g.grid, g.tt - sigma.tt(), g.tp - sigma.tp(), g.pp - sigma.pp()};
  ge.lorentz_residual = Metric2::frame_max_abs(d) / sigma.frame_max_abs();
  return ge;
}

inline GraphEmbedding graph_embedding_r31(const Metric2& sigma, const ScalarField& tau, WeylOptions opts = {}) {
  return graph_embedding_from(sigma, tau, solve_weyl(metric_add_dtau(sigma, tau), opts));
}

}  // namespace qlm
