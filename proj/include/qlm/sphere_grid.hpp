#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "qlm/errors.hpp"

namespace qlm {

using Array = Eigen::ArrayXXd;

/// Behaviour of a coordinate component under the antipodal chart map
/// (theta, phi) -> (-theta, phi + pi). Scalars and phi-components are even,
/// every theta index contributes a sign flip.
enum class Parity : int { even = 1, odd = -1 };

constexpr Parity flip(Parity p) { return p == Parity::even ? Parity::odd : Parity::even; }
constexpr Parity operator*(Parity a, Parity b) {
  return static_cast<int>(a) * static_cast<int>(b) == 1 ? Parity::even : Parity::odd;
}

/// Gauss-Legendre colatitude nodes times uniform longitude nodes, with
/// spectral differentiation in both directions.
///
/// Values live in (n_theta x n_phi) arrays; row i is colatitude theta_i
/// (ascending), column j is longitude phi_j = 2 pi j / n_phi. The flattened
/// node index is i * n_phi + j.
class SphereGrid {
 public:
  SphereGrid(int n_theta, int n_phi) : n_theta_(n_theta), n_phi_(n_phi) {
    if (n_theta < 4) throw PreconditionError("SphereGrid: n_theta must be >= 4");
    if (n_phi < 4 || n_phi % 2 != 0)
      throw PreconditionError("SphereGrid: n_phi must be even and >= 4");
    build_legendre();
    build_fourier();
  }

  static std::shared_ptr<const SphereGrid> make(int n_theta = 48, int n_phi = 96) {
    return std::make_shared<const SphereGrid>(n_theta, n_phi);
  }

  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  int size() const { return n_theta_ * n_phi_; }
  double dphi() const { return 2.0 * std::numbers::pi / n_phi_; }

  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::VectorXd& cos_theta() const { return x_; }
  const Eigen::VectorXd& sin_theta() const { return s_; }
  const Eigen::VectorXd& phi() const { return phi_; }
  /// Gauss-Legendre weights in x = cos(theta).
  const Eigen::VectorXd& gl_weights() const { return w_; }

  /// Round-measure quadrature weights sin(theta) dtheta dphi per node.
  Array quad_weights() const {
    Array q(n_theta_, n_phi_);
    for (int i = 0; i < n_theta_; ++i) q.row(i).setConstant(w_(i) * dphi());
    return q;
  }

  /// Broadcast a per-row profile to a full array.
  Array rows(const Eigen::VectorXd& profile) const {
    return profile.replicate(1, n_phi_).array();
  }

  bool same_shape(const SphereGrid& other) const {
    return n_theta_ == other.n_theta_ && n_phi_ == other.n_phi_;
  }

  /// d/dphi via the periodic spectral differentiation matrix.
  Array d_phi(const Array& f) const {
    return (f.matrix() * dphi_t_).array();
  }

  /// d/dtheta of a component with antipodal parity p; the result has parity
  /// flip(p). The field is split into even-m and odd-m parts; each part is a
  /// polynomial in cos(theta) or sin(theta) times one, and is differentiated
  /// by collocation at the Gauss nodes.
  Array d_theta(const Array& f, Parity p) const {
    const int h = n_phi_ / 2;
    Array shifted(n_theta_, n_phi_);
    shifted.leftCols(n_phi_ - h) = f.rightCols(n_phi_ - h);
    shifted.rightCols(h) = f.leftCols(h);
    const Eigen::MatrixXd even_m = 0.5 * (f + shifted).matrix();
    const Eigen::MatrixXd odd_m = 0.5 * (f - shifted).matrix();
    if (p == Parity::even) return (dtheta_poly_ * even_m + dtheta_sin_poly_ * odd_m).array();
    return (dtheta_sin_poly_ * even_m + dtheta_poly_ * odd_m).array();
  }

  /// Collocation differentiation matrix in x = cos(theta) at the Gauss nodes.
  const Eigen::MatrixXd& dx_matrix() const { return dx_; }

  std::string describe() const {
    return std::to_string(n_theta_) + "x" + std::to_string(n_phi_);
  }

 private:
  void build_legendre() {
    const int n = n_theta_;
    x_.resize(n);
    w_.resize(n);
    Eigen::VectorXd dp(n);
    for (int i = 0; i < n; ++i) {
      // Newton on P_n from the Tricomi initial guess; node i is the i-th largest root.
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dpn = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dpn = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dpn;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dpn = n * (x * p1 - p0) / (x * x - 1.0);
      x_(i) = x;
      w_(i) = 2.0 / ((1.0 - x * x) * dpn * dpn);
      dp(i) = dpn;
    }
    theta_ = x_.array().acos().matrix();
    s_ = (1.0 - x_.array().square()).sqrt().matrix();

    // Barycentric weights of the Gauss nodes are proportional to 1 / P_n'(x_i).
    dx_.setZero(n, n);
    for (int i = 0; i < n; ++i) {
      double diag = 0.0;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        dx_(i, j) = (dp(i) / dp(j)) / (x_(i) - x_(j));
        diag -= dx_(i, j);
      }
      dx_(i, i) = diag;
    }

    // Part A: f = P(x)             -> df/dtheta = -sin(theta) P'(x)
    // Part B: f = sin(theta) Q(x)  -> df/dtheta = x Q - sin^2(theta) Q'(x)
    const Eigen::VectorXd inv_s = s_.cwiseInverse();
    dtheta_poly_ = -(s_.asDiagonal() * dx_);
    dtheta_sin_poly_ = (x_.cwiseProduct(inv_s)).asDiagonal().toDenseMatrix();
    dtheta_sin_poly_ -= s_.cwiseAbs2().asDiagonal() * dx_ * inv_s.asDiagonal();
  }

  void build_fourier() {
    const int n = n_phi_;
    phi_.resize(n);
    for (int j = 0; j < n; ++j) phi_(j) = dphi() * j;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (j == k) continue;
        const int diff = j - k;
        const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
        d(j, k) = 0.5 * sign / std::tan(0.5 * diff * dphi());
      }
    // Exact zero row sums so constants differentiate to zero.
    for (int j = 0; j < n; ++j) d(j, j) = -(d.row(j).sum() - d(j, j));
    dphi_t_ = d.transpose();
  }

  int n_theta_, n_phi_;
  Eigen::VectorXd x_, w_, theta_, s_, phi_;
  Eigen::MatrixXd dx_, dtheta_poly_, dtheta_sin_poly_, dphi_t_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

}  // namespace qlm
