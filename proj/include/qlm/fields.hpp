#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "qlm/sphere_grid.hpp"

namespace qlm {

namespace detail {

inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* where) {
  if (!a || !b) throw ShapeError(std::string(where) + ": field has no grid");
  if (a != b && !a->same_shape(*b))
    throw ShapeError(std::string(where) + ": grid mismatch (" + a->describe() + " vs " +
                     b->describe() + ")");
}

inline void require_shape(const GridPtr& g, const Array& a, const char* where) {
  if (!g) throw ShapeError(std::string(where) + ": field has no grid");
  if (a.rows() != g->n_theta() || a.cols() != g->n_phi())
    throw ShapeError(std::string(where) + ": array is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", grid is " + g->describe());
}

/// First non-finite entry as a flattened node index, or -1.
inline long first_non_finite(const Array& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (!std::isfinite(a(i, j))) return static_cast<long>(i * a.cols() + j);
  return -1;
}

}  // namespace detail

/// Real value per grid node.
struct ScalarField {
  GridPtr grid;
  Array values;

  ScalarField() = default;
  ScalarField(GridPtr g, Array v) : grid(std::move(g)), values(std::move(v)) {
    detail::require_shape(grid, values, "ScalarField");
  }

  static ScalarField constant(const GridPtr& g, double c) {
    return {g, Array::Constant(g->n_theta(), g->n_phi(), c)};
  }
  static ScalarField zero(const GridPtr& g) { return constant(g, 0.0); }

  /// Sample f(theta, phi) at every node.
  template <class F>
  static ScalarField from_function(const GridPtr& g, F&& f) {
    Array v(g->n_theta(), g->n_phi());
    for (int i = 0; i < g->n_theta(); ++i)
      for (int j = 0; j < g->n_phi(); ++j) v(i, j) = f(g->theta()(i), g->phi()(j));
    return {g, std::move(v)};
  }

  double max_abs() const { return values.abs().maxCoeff(); }
  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
  bool all_finite() const { return detail::first_non_finite(values) < 0; }

  ScalarField& operator+=(const ScalarField& o) {
    detail::require_same_grid(grid, o.grid, "ScalarField +=");
    values += o.values;
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    detail::require_same_grid(grid, o.grid, "ScalarField -=");
    values -= o.values;
    return *this;
  }
  ScalarField& operator*=(double c) {
    values *= c;
    return *this;
  }
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(ScalarField a, double c) { return a *= c; }
inline ScalarField operator*(double c, ScalarField a) { return a *= c; }
inline ScalarField operator+(ScalarField a, double c) {
  a.values += c;
  return a;
}
inline ScalarField operator-(const ScalarField& a) { return {a.grid, -a.values}; }
inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  detail::require_same_grid(a.grid, b.grid, "ScalarField *");
  return {a.grid, a.values * b.values};
}
inline ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  detail::require_same_grid(a.grid, b.grid, "ScalarField /");
  return {a.grid, a.values / b.values};
}

/// Covariant one-form (omega_theta, omega_phi) in the fixed (theta, phi) chart.
struct OneForm {
  GridPtr grid;
  Array t, p;

  OneForm() = default;
  OneForm(GridPtr g, Array t_, Array p_) : grid(std::move(g)), t(std::move(t_)), p(std::move(p_)) {
    detail::require_shape(grid, t, "OneForm");
    detail::require_shape(grid, p, "OneForm");
  }
  static OneForm zero(const GridPtr& g) {
    return {g, Array::Zero(g->n_theta(), g->n_phi()), Array::Zero(g->n_theta(), g->n_phi())};
  }
  double max_abs() const { return std::max(t.abs().maxCoeff(), p.abs().maxCoeff()); }
  bool all_finite() const {
    return detail::first_non_finite(t) < 0 && detail::first_non_finite(p) < 0;
  }

  static constexpr Parity parity_t = Parity::odd;
  static constexpr Parity parity_p = Parity::even;
};

inline OneForm operator+(const OneForm& a, const OneForm& b) {
  detail::require_same_grid(a.grid, b.grid, "OneForm +");
  return {a.grid, a.t + b.t, a.p + b.p};
}
inline OneForm operator-(const OneForm& a, const OneForm& b) {
  detail::require_same_grid(a.grid, b.grid, "OneForm -");
  return {a.grid, a.t - b.t, a.p - b.p};
}
inline OneForm operator*(const ScalarField& f, const OneForm& a) {
  detail::require_same_grid(f.grid, a.grid, "ScalarField * OneForm");
  return {a.grid, f.values * a.t, f.values * a.p};
}
inline OneForm operator*(double c, const OneForm& a) { return {a.grid, c * a.t, c * a.p}; }

/// Contravariant tangent vector (V^theta, V^phi).
struct VectorField {
  GridPtr grid;
  Array t, p;
};

/// Symmetric 2-tensor components (tt, tp, pp); no definiteness implied.
struct SymmetricTensor {
  GridPtr grid;
  Array tt, tp, pp;

  static SymmetricTensor zero(const GridPtr& g) {
    const Array z = Array::Zero(g->n_theta(), g->n_phi());
    return {g, z, z, z};
  }
  double max_abs() const {
    return std::max({tt.abs().maxCoeff(), tp.abs().maxCoeff(), pp.abs().maxCoeff()});
  }

  static constexpr Parity parity_tt = Parity::even;
  static constexpr Parity parity_tp = Parity::odd;
  static constexpr Parity parity_pp = Parity::even;
};

/// Riemannian metric on S^2 in the (theta, phi) chart, positive definite at
/// every node. Construction validates the invariant.
class Metric2 {
 public:
  Metric2() = default;
  Metric2(GridPtr g, Array tt, Array tp, Array pp)
      : grid_(std::move(g)), tt_(std::move(tt)), tp_(std::move(tp)), pp_(std::move(pp)) {
    detail::require_shape(grid_, tt_, "Metric2");
    detail::require_shape(grid_, tp_, "Metric2");
    detail::require_shape(grid_, pp_, "Metric2");
    validate();
  }
  explicit Metric2(const SymmetricTensor& s) : Metric2(s.grid, s.tt, s.tp, s.pp) {}

  /// r^2 (dtheta^2 + sin^2 theta dphi^2).
  static Metric2 round(const GridPtr& g, double radius = 1.0) {
    const Array s2 = g->rows(g->sin_theta().cwiseAbs2());
    const double r2 = radius * radius;
    return {g, Array::Constant(g->n_theta(), g->n_phi(), r2),
            Array::Zero(g->n_theta(), g->n_phi()), r2 * s2};
  }

  const GridPtr& grid() const { return grid_; }
  const Array& tt() const { return tt_; }
  const Array& tp() const { return tp_; }
  const Array& pp() const { return pp_; }

  Array det() const { return tt_ * pp_ - tp_ * tp_; }
  Array sqrt_det() const { return det().sqrt(); }
  /// Inverse components sigma^{ab}.
  Array inv_tt() const { return pp_ / det(); }
  Array inv_tp() const { return -tp_ / det(); }
  Array inv_pp() const { return tt_ / det(); }

  SymmetricTensor tensor() const { return {grid_, tt_, tp_, pp_}; }

  Metric2 scaled(double c) const { return {grid_, c * tt_, c * tp_, c * pp_}; }

  /// Max over nodes of |component| after scaling to the round orthonormal
  /// frame (tt, tp / sin, pp / sin^2).
  double frame_max_abs() const { return frame_max_abs(tensor()); }
  static double frame_max_abs(const SymmetricTensor& s) {
    const Array inv_s = s.grid->rows(s.grid->sin_theta().cwiseInverse());
    return std::max({s.tt.abs().maxCoeff(), (s.tp * inv_s).abs().maxCoeff(),
                     (s.pp * inv_s.square()).abs().maxCoeff()});
  }

 private:
  void validate() const {
    const Array d = det();
    for (int i = 0; i < grid_->n_theta(); ++i)
      for (int j = 0; j < grid_->n_phi(); ++j) {
        if (!std::isfinite(tt_(i, j)) || !std::isfinite(tp_(i, j)) || !std::isfinite(pp_(i, j)) ||
            tt_(i, j) <= 0.0 || d(i, j) <= 0.0) {
          std::ostringstream os;
          os << "Metric2: not positive definite at node (" << i << ", " << j << ")";
          throw PreconditionError(os.str(), static_cast<long>(i) * grid_->n_phi() + j);
        }
      }
  }

  GridPtr grid_;
  Array tt_, tp_, pp_;
};

}  // namespace qlm
