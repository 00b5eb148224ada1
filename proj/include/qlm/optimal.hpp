#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <sstream>
#include <vector>

#include "qlm/catalog.hpp"

namespace qlm {

struct OptimalOptions {
  double tol = 1e-6;          // L2(dA_sigma) norm of the EL residual
  int max_iterations = 200;
  int l_max = 16;             // degree cap for tau
  double initial_radius = 0.1;  // trust region, in coefficient norm
  double min_radius = 1e-6;
  WeylOptions weyl = detail::tight_weyl();
  std::function<void(int, double, double)> on_iteration;  // (iteration, energy, residual norm)
};

struct OptimalSolveResult {
  TimeFunction tau_star;
  double energy = 0.0;
  double el_residual_norm = 0.0;      // dealiased, see el_residual_norm()
  double el_residual_raw_norm = 0.0;  // nodal values, includes pole roundoff
  int iterations = 0;
  bool converged = false;
  std::optional<double> hessian_min_eig;
  EnergyBreakdown breakdown;
  std::vector<double> energy_history;  // energies of accepted iterates
};

inline double l2_norm(const Metric2& sigma, const ScalarField& f) { return std::sqrt(integrate(sigma, f * f)); }

/// Harmonic degree cap for residual norms: the lower two thirds of the
/// resolvable band. The nodal EL residual carries roundoff on the rings next
/// to the poles that grows with resolution and has no smooth component.
inline int dealias_degree(const SphereGrid& g) { return std::min(2 * g.n_theta() / 3, g.n_phi() / 2 - 1); }

/// L2(dA_sigma) norm of the EL residual projected to degrees <= dealias_degree.
class ResidualNorm {
 public:
  explicit ResidualNorm(const GridPtr& g) : basis_(g, dealias_degree(*g)) {}
  double operator()(const Metric2& sigma, const ScalarField& el) const {
    return l2_norm(sigma, basis_.field(basis_.analyze(el.values)));
  }

 private:
  HarmonicBasis basis_;
};

inline double el_residual_norm(const Metric2& sigma, const ScalarField& el) {
  return ResidualNorm(sigma.grid())(sigma, el);
}

/// Run body(k) for k in [0, n) on up to `threads` threads; the first
/// exception thrown by any task is rethrown.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace detail {

/// tau restricted to harmonic degrees 1..l_max, coordinates in the round
/// orthonormal basis (the l = 0 coefficient is frozen at zero).
class TauSpace {
 public:
  TauSpace(const GridPtr& g, int l_max) : basis_(g, std::min(l_max, std::min(g->n_theta() - 1, g->n_phi() / 2 - 1))) {
    for (int k = 0; k < basis_.size(); ++k)
      if (k != basis_.index(0, 0)) active_.push_back(k);
    for (const auto& gr : basis_.groups())
      for (int k = 0; k < gr.count; ++k) degree_.push_back(gr.m + k);
  }
  int size() const { return static_cast<int>(active_.size()); }
  const HarmonicBasis& basis() const { return basis_; }
  int degree(int i) const { return degree_[active_[i]]; }

  ScalarField field(const Eigen::VectorXd& p) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_.size());
    for (int i = 0; i < size(); ++i) c(active_[i]) = p(i);
    return basis_.field(c);
  }
  Eigen::VectorXd coords(const ScalarField& f) const {
    const Eigen::VectorXd c = basis_.analyze(f.values);
    Eigen::VectorXd p(size());
    for (int i = 0; i < size(); ++i) p(i) = c(active_[i]);
    return p;
  }
  /// dE/dp_i = (1/8pi) int el Y_i dA_sigma.
  Eigen::VectorXd gradient(const Metric2& sigma, const ScalarField& el) const {
    const auto& g = *sigma.grid();
    const Array dens = g.quad_weights() * sigma.sqrt_det() / g.rows(g.sin_theta()) * el.values;
    const Eigen::VectorXd c = basis_.adjoint(dens);
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i) out(i) = inv_8pi * c(active_[i]);
    return out;
  }
  /// Indices of the active modes sorted by degree.
  std::vector<int> by_degree() const {
    std::vector<int> idx(size());
    for (int i = 0; i < size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return degree(a) < degree(b); });
    return idx;
  }

 private:
  HarmonicBasis basis_;
  std::vector<int> active_, degree_;
};

/// Second variation of E at tau = 0 for round data of radius R and constant
/// |H|, per orthonormal mode of degree l.
inline double round_second_variation(int l, double R, double H) {
  const double lam = l * (l + 1.0) / (R * R);
  return inv_8pi * R * R * ((1.0 / R - H) * lam + lam * lam / H);
}

}  // namespace detail

/// Minimize E(data, tau) over tau by a trust-region quasi-Newton method.
inline OptimalSolveResult solve_optimal(const SurfaceData& data, const TimeFunction& tau0, OptimalOptions opts = {}) {
  detail::require_same_grid(data.grid(), tau0.tau.grid, "solve_optimal");
  detail::TauSpace space(data.grid(), opts.l_max);
  EnergyEvaluator ev(data.grid(), opts.weyl);
  const ResidualNorm norm(data.grid());
  const int n = space.size();

  auto eval = [&](const Eigen::VectorXd& p) { return ev.evaluate(data, TimeFunction{space.field(p)}); };

  Eigen::VectorXd p = space.coords(tau0.tau);
  EnergyEvaluator::Evaluation cur = eval(p);  // precondition errors of tau0 propagate
  Eigen::VectorXd g = space.gradient(data.sigma, cur.el);
  double res = norm(data.sigma, cur.el);

  // Hessian model seeded by the round-data second variation, floored so the
  // degenerate l = 1 modes of flat data stay invertible.
  const double R = std::sqrt(area(data.sigma) / (4.0 * std::numbers::pi));
  const double Hm = integrate(data.sigma, data.H_norm) / area(data.sigma);
  const double floor = 0.05 * detail::round_second_variation(2, R, Hm);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) B(i, i) = std::max(detail::round_second_variation(space.degree(i), R, Hm), floor);

  OptimalSolveResult out;
  out.energy_history.push_back(cur.breakdown.energy);
  double radius = opts.initial_radius;
  int it = 0;
  while (res >= opts.tol && it < opts.max_iterations) {
    ++it;
    Eigen::VectorXd step = B.llt().solve(-g);
    bool boundary = false;
    if (step.norm() > radius) {
      step *= radius / step.norm();
      boundary = true;
    }
    const double predicted = -(g.dot(step) + 0.5 * step.dot(B * step));
    std::optional<EnergyEvaluator::Evaluation> trial;
    try {
      trial = eval(p + step);
    } catch (const PreconditionError&) {
    } catch (const ConvergenceError&) {
    }
    if (!trial) {
      radius = 0.25 * std::min(radius, step.norm());
    } else {
      const double actual = cur.breakdown.energy - trial->breakdown.energy;
      const double ratio = predicted > 0.0 ? actual / predicted : -1.0;
      const Eigen::VectorXd g_new = space.gradient(data.sigma, trial->el);
      const Eigen::VectorXd y = g_new - g;
      const double sy = step.dot(y);
      if (sy > 1e-14 * step.norm() * y.norm()) {
        const Eigen::VectorXd Bs = B * step;
        B += y * y.transpose() / sy - Bs * Bs.transpose() / step.dot(Bs);
      }
      // Energy differences below the evaluation noise carry no information;
      // such steps are judged by the gradient instead.
      const bool noise_level = std::abs(actual) < 1e-12 * std::max(1.0, std::abs(cur.breakdown.energy));
      const bool accept = (actual >= 0.0 && ratio > 1e-4) ||
                          (noise_level && norm(data.sigma, trial->el) < res);
      if (accept) {
        p += step;
        cur = std::move(*trial);
        g = g_new;
        res = norm(data.sigma, cur.el);
        out.energy_history.push_back(cur.breakdown.energy);
        if (ratio > 0.75 && boundary) radius *= 2.0;
        else if (ratio < 0.25 && !noise_level) radius *= 0.5;
      } else {
        radius = 0.25 * std::min(radius, step.norm());
      }
    }
    if (opts.on_iteration) opts.on_iteration(it, cur.breakdown.energy, res);
    if (radius < opts.min_radius) {
      std::ostringstream os;
      os << "solve_optimal: trust region collapsed (radius " << radius << ") after " << it
         << " iterations; energy " << cur.breakdown.energy << ", EL residual " << res;
      throw ConvergenceError(os.str());
    }
  }
  out.tau_star = TimeFunction{space.field(p)};
  out.energy = cur.breakdown.energy;
  out.el_residual_norm = res;
  out.el_residual_raw_norm = l2_norm(data.sigma, cur.el);
  out.iterations = it;
  out.converged = res < opts.tol;
  out.breakdown = std::move(cur.breakdown);
  return out;
}

struct HessianReport {
  Eigen::MatrixXd hessian;         // d^2 E / dp_i dp_j, p orthonormal harmonic coordinates
  std::vector<int> degrees;        // harmonic degree of each direction
  Eigen::VectorXd eigenvalues;     // of the symmetrized matrix, ascending
  double min_eigenvalue = 0.0;
  double symmetry_error = 0.0;     // |H - H^T|_max / |H|_max
};

/// Reduced Hessian of E at tau_star from central differences of the EL
/// residual along the first n_modes non-constant harmonics. Columns are
/// independent; each starts from the same warm-started evaluator, so the
/// result does not depend on `threads`.
inline HessianReport hessian_check(const SurfaceData& data, const TimeFunction& tau_star, int n_modes = 15,
                                   double h = 1e-3, WeylOptions weyl = {}, int threads = 1) {
  weyl.tol = std::min(weyl.tol, 1e-13);
  detail::TauSpace space(data.grid(), 16);
  EnergyEvaluator base(data.grid(), weyl);
  const double pre = el_residual_norm(data.sigma, base.el_residual(data, tau_star));
  if (!(pre < 1e-5)) {
    std::ostringstream os;
    os << "hessian_check: EL residual " << pre << " at tau_star exceeds 1e-5";
    throw PreconditionError(os.str());
  }
  const std::vector<int> order = space.by_degree();
  n_modes = std::min<int>(n_modes, space.size());
  HessianReport rep;
  rep.hessian.resize(n_modes, n_modes);
  for (int j = 0; j < n_modes; ++j) rep.degrees.push_back(space.degree(order[j]));

  auto column = [&](int j) {
    EnergyEvaluator ev = base;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(space.size());
    e(order[j]) = h;
    const ScalarField d = space.field(e);
    const Eigen::VectorXd gp = space.gradient(data.sigma, ev.el_residual(data, TimeFunction{tau_star.tau + d}));
    ev = base;
    const Eigen::VectorXd gm = space.gradient(data.sigma, ev.el_residual(data, TimeFunction{tau_star.tau + (-d)}));
    for (int i = 0; i < n_modes; ++i) rep.hessian(i, j) = (gp(order[i]) - gm(order[i])) / (2.0 * h);
  };
  parallel_for(n_modes, threads, column);

  const double scale = rep.hessian.cwiseAbs().maxCoeff();
  rep.symmetry_error = (rep.hessian - rep.hessian.transpose()).cwiseAbs().maxCoeff() / scale;
  const Eigen::MatrixXd sym = 0.5 * (rep.hessian + rep.hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  rep.eigenvalues = es.eigenvalues();
  rep.min_eigenvalue = rep.eigenvalues(0);
  return rep;
}

struct ComparisonReport {
  double energy_tau = 0.0;        // E(Sigma, tau)
  double energy_star = 0.0;       // E(Sigma, tau_star)
  double energy_reference = 0.0;  // E(Xbar(Sigma), tau): reference surface seen by tau
  double slack = 0.0;             // energy_tau - energy_star - energy_reference
  double rho_min = 0.0;
};

/// Evaluate E(Sigma, tau) >= E(Sigma, tau_star) + E(Xbar(Sigma), tau), where
/// Xbar is the graph embedding of tau_star treated as a surface in R^{3,1}.
inline ComparisonReport comparison_check(const SurfaceData& data, const TimeFunction& tau_star,
                                         const TimeFunction& tau, WeylOptions weyl = detail::tight_weyl()) {
  EnergyEvaluator ev(data.grid(), weyl);
  ComparisonReport rep;
  const EnergyEvaluator::Evaluation star = ev.evaluate(data, tau_star, false, true);
  rep.energy_star = star.breakdown.energy;
  rep.rho_min = star.breakdown.rho->min();
  if (!(rep.rho_min > 0.0)) {
    std::ostringstream os;
    os << "comparison_check: mass density rho is not positive at tau_star (min " << rep.rho_min << ")";
    throw PreconditionError(os.str());
  }
  rep.energy_tau = ev.energy(data, tau).energy;
  const MinkowskiSurface ref = minkowski_surface_from_values(
      {tau_star.tau, star.embedding.X[0], star.embedding.X[1], star.embedding.X[2]});
  EnergyEvaluator ev_ref(data.grid(), weyl);
  rep.energy_reference = ev_ref.energy(ref.data, tau).energy;
  rep.slack = rep.energy_tau - rep.energy_star - rep.energy_reference;
  return rep;
}

}  // namespace qlm
