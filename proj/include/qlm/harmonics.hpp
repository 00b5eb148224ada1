#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "qlm/fields.hpp"

namespace qlm {

namespace detail {

/// Fully normalized associated Legendre functions Pbar_l^m(x), int_{-1}^1 Pbar^2 = 1,
/// without the Condon-Shortley phase, for l = m..l_max at one point.
inline void normalized_legendre(int l_max, int m, double x, double s, std::vector<double>& out) {
  out.assign(l_max - m + 1, 0.0);
  double pmm = std::sqrt(0.5);
  for (int k = 1; k <= m; ++k) pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
  out[0] = pmm;
  if (l_max == m) return;
  out[1] = std::sqrt(2.0 * m + 3.0) * x * pmm;
  for (int l = m + 2; l <= l_max; ++l) {
    const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
    const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
    out[l - m] = a * (x * out[l - m - 1] - b * out[l - m - 2]);
  }
}

}  // namespace detail

/// Real orthonormal spherical harmonic, int Y^2 dOmega = 1. m > 0 selects
/// cos(m phi), m < 0 selects sin(|m| phi).
inline double real_sph_harm(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  if (am > l) return 0.0;
  std::vector<double> p;
  detail::normalized_legendre(l, am, std::cos(theta), std::sin(theta), p);
  const double v = p[l - am];
  if (m == 0) return v / std::sqrt(2.0 * std::numbers::pi);
  return v / std::sqrt(std::numbers::pi) * (m > 0 ? std::cos(am * phi) : std::sin(am * phi));
}

/// Schmidt semi-normalized harmonic: P_l(cos theta) for m = 0, so Y_10 is
/// cos(theta), Y_11 is sin(theta) cos(phi). Named perturbation amplitudes
/// ("0.05 Y_10") use this convention throughout the library.
inline double schmidt_harm(int l, int m, double theta, double phi) {
  return std::sqrt(4.0 * std::numbers::pi / (2.0 * l + 1.0)) * real_sph_harm(l, m, theta, phi);
}

inline ScalarField harmonic_field(const GridPtr& g, int l, int m, double amplitude = 1.0) {
  return ScalarField::from_function(
      g, [&](double t, double p) { return amplitude * schmidt_harm(l, m, t, p); });
}

/// Orthonormal real spherical harmonic basis up to degree l_max sampled on a
/// grid. Coefficients are ordered in (m, kind) groups; within a group l runs
/// from m to l_max. Synthesis, its adjoint and the angular derivatives are
/// exact for band-limited fields.
class HarmonicBasis {
 public:
  enum class Kind { cos, sin };
  struct Group {
    int m;
    Kind kind;
    int offset;  // first coefficient index
    int count;   // l_max - m + 1
  };
  enum class Deriv { none, theta, phi };

  HarmonicBasis(GridPtr grid, int l_max) : grid_(std::move(grid)), l_max_(l_max) {
    if (l_max < 0) throw PreconditionError("HarmonicBasis: l_max must be >= 0");
    if (l_max >= grid_->n_theta() || l_max >= grid_->n_phi() / 2)
      throw PreconditionError("HarmonicBasis: l_max exceeds grid resolution");
    const int nt = grid_->n_theta();
    int offset = 0;
    p_.resize(l_max + 1);
    dp_.resize(l_max + 1);
    std::vector<double> col;
    for (int m = 0; m <= l_max; ++m) {
      const int count = l_max - m + 1;
      p_[m].resize(nt, count);
      dp_[m].resize(nt, count);
      const double norm = (m == 0) ? 1.0 / std::sqrt(2.0 * std::numbers::pi)
                                   : 1.0 / std::sqrt(std::numbers::pi);
      for (int i = 0; i < nt; ++i) {
        const double x = grid_->cos_theta()(i), s = grid_->sin_theta()(i);
        detail::normalized_legendre(l_max, m, x, s, col);
        for (int k = 0; k < count; ++k) p_[m](i, k) = norm * col[k];
        // dPbar_l^m/dtheta = [l x Pbar_l^m - sqrt((2l+1)(l^2-m^2)/(2l-1)) Pbar_{l-1}^m] / sin
        for (int k = 0; k < count; ++k) {
          const int l = m + k;
          const double prev = (k > 0) ? col[k - 1] : 0.0;
          const double c = (k > 0) ? std::sqrt((2.0 * l + 1.0) * (double(l) * l - double(m) * m) / (2.0 * l - 1.0))
                                   : 0.0;
          dp_[m](i, k) = norm * (l * x * col[k] - c * prev) / s;
        }
      }
      groups_.push_back({m, Kind::cos, offset, count});
      offset += count;
      if (m > 0) {
        groups_.push_back({m, Kind::sin, offset, count});
        offset += count;
      }
    }
    size_ = offset;
    const int np = grid_->n_phi();
    cos_.resize(l_max + 1, np);
    sin_.resize(l_max + 1, np);
    for (int m = 0; m <= l_max; ++m)
      for (int j = 0; j < np; ++j) {
        cos_(m, j) = std::cos(m * grid_->phi()(j));
        sin_(m, j) = std::sin(m * grid_->phi()(j));
      }
  }

  const GridPtr& grid() const { return grid_; }
  int l_max() const { return l_max_; }
  int size() const { return size_; }
  const std::vector<Group>& groups() const { return groups_; }

  int index(int l, int m) const {
    const int am = std::abs(m);
    for (const auto& gr : groups_)
      if (gr.m == am && (m >= 0) == (gr.kind == Kind::cos)) return gr.offset + (l - am);
    return -1;
  }

  /// Theta profile of group members: Pbar (times normalization), or its theta derivative.
  const Eigen::MatrixXd& profile(int m) const { return p_[m]; }
  const Eigen::MatrixXd& dprofile(int m) const { return dp_[m]; }
  const Eigen::MatrixXd& cos_table() const { return cos_; }
  const Eigen::MatrixXd& sin_table() const { return sin_; }

  /// Values (or a first angular derivative) of sum_k c_k Y_k on the grid.
  Array synthesize(const Eigen::Ref<const Eigen::VectorXd>& c, Deriv d = Deriv::none) const {
    const int nt = grid_->n_theta(), np = grid_->n_phi();
    Eigen::MatrixXd a_cos = Eigen::MatrixXd::Zero(nt, l_max_ + 1);
    Eigen::MatrixXd a_sin = Eigen::MatrixXd::Zero(nt, l_max_ + 1);
    for (const auto& gr : groups_) {
      const auto& prof = (d == Deriv::theta) ? dp_[gr.m] : p_[gr.m];
      Eigen::VectorXd col = prof * c.segment(gr.offset, gr.count);
      if (d == Deriv::phi) {
        // d/dphi: cos -> -m sin, sin -> m cos
        if (gr.kind == Kind::cos) a_sin.col(gr.m) -= gr.m * col;
        else a_cos.col(gr.m) += gr.m * col;
      } else {
        if (gr.kind == Kind::cos) a_cos.col(gr.m) += col;
        else a_sin.col(gr.m) += col;
      }
    }
    Eigen::MatrixXd out = a_cos * cos_ + a_sin * sin_;
    (void)np;
    return out.array();
  }

  /// Adjoint of synthesize: sum over nodes of v(node) * (derivative of) Y_k(node).
  Eigen::VectorXd adjoint(const Array& v, Deriv d = Deriv::none) const {
    const Eigen::MatrixXd vc = v.matrix() * cos_.transpose();  // nt x (l_max+1)
    const Eigen::MatrixXd vs = v.matrix() * sin_.transpose();
    Eigen::VectorXd out(size_);
    for (const auto& gr : groups_) {
      const auto& prof = (d == Deriv::theta) ? dp_[gr.m] : p_[gr.m];
      Eigen::VectorXd col;
      if (d == Deriv::phi) {
        col = (gr.kind == Kind::cos) ? Eigen::VectorXd(-gr.m * vs.col(gr.m))
                                     : Eigen::VectorXd(gr.m * vc.col(gr.m));
      } else {
        col = (gr.kind == Kind::cos) ? vc.col(gr.m) : vs.col(gr.m);
      }
      out.segment(gr.offset, gr.count) = prof.transpose() * col;
    }
    return out;
  }

  /// Orthogonal projection by quadrature; exact for band-limited input.
  Eigen::VectorXd analyze(const Array& v) const { return adjoint(v * grid_->quad_weights()); }

  ScalarField field(const Eigen::Ref<const Eigen::VectorXd>& c) const {
    return {grid_, synthesize(c)};
  }

 private:
  GridPtr grid_;
  int l_max_;
  int size_ = 0;
  std::vector<Group> groups_;
  std::vector<Eigen::MatrixXd> p_, dp_;
  Eigen::MatrixXd cos_, sin_;
};

}  // namespace qlm
