#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

namespace gravbath {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using CMat3 = Eigen::Matrix3cd;

/// Unit system the caller declares. Defaults to natural units.
struct Units {
  double hbar = 1.0;
  double c = 1.0;
  double kB = 1.0;
};

/// Particle and bath parameters together with the derived damping constant
/// gamma = eps2 M^2 c^2 / (10 pi hbar), the induced-emission frequency
/// w = 2 gamma kB T / hbar and beta = 1 / (kB T).
class PhysicalParams {
 public:
  /// Throws std::invalid_argument when M <= 0, T < 0, eps2 < 0 or any unit is
  /// non-positive.
  PhysicalParams(double mass, double temperature, double eps2, Units units = {});

  /// Configure through gamma directly; eps2 is back-computed so that the two
  /// descriptions stay consistent.
  static PhysicalParams with_gamma(double mass, double temperature, double gamma,
                                   Units units = {});

  double mass() const { return mass_; }
  double temperature() const { return temperature_; }
  double eps2() const { return eps2_; }
  double hbar() const { return units_.hbar; }
  double c() const { return units_.c; }
  double kB() const { return units_.kB; }
  const Units& units() const { return units_; }

  double gamma() const { return gamma_; }
  double w() const { return w_; }
  /// Throws std::domain_error for T == 0.
  double beta() const;

  /// gamma*hbar / c^4, the only damping combination entering the classical
  /// equations of motion.
  double damping_scale() const;

 private:
  double mass_;
  double temperature_;
  double eps2_;
  Units units_;
  double gamma_;
  double w_;
};

/// Symmetric traceless 3x3 tensor. Construction projects onto that subspace.
class TracelessSymTensor3 {
 public:
  TracelessSymTensor3() : m_(Mat3::Zero()) {}

  /// Symmetrize and remove the trace.
  static TracelessSymTensor3 project(const Mat3& m);

  double operator()(int k, int l) const { return m_(k, l); }
  const Mat3& matrix() const { return m_; }
  double trace() const { return m_.trace(); }
  /// Full contraction t_kl t_kl.
  double squared_norm() const { return m_.cwiseAbs2().sum(); }

 private:
  explicit TracelessSymTensor3(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Rank-4 tensor Lambda_{ij,kl} on spatial indices.
class PolProjector {
 public:
  PolProjector() { data_.fill(0.0); }

  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }

  /// (Lambda t)_ij = Lambda_{ij,kl} t_kl.
  Mat3 apply(const Mat3& t) const;
  CMat3 apply(const CMat3& t) const;

  /// Contraction over the middle pair: (A B)_{ij,mn} = A_{ij,kl} B_{kl,mn}.
  PolProjector compose(const PolProjector& other) const;

  double max_abs_diff(const PolProjector& other) const;
  double max_abs() const;

  PolProjector& operator+=(const PolProjector& other);
  PolProjector& operator*=(double s);

 private:
  static constexpr std::size_t index(int i, int j, int k, int l) {
    return static_cast<std::size_t>(((i * 3 + j) * 3 + k) * 3 + l);
  }
  std::array<double, 81> data_;
};

/// Helicity +2 and -2 polarization tensors for a propagation direction.
struct PolarizationPair {
  CMat3 plus;
  CMat3 minus;
};

/// Transverse projector delta_ij - k_i k_j. Throws std::invalid_argument unless
/// |khat| = 1 within 1e-12.
Mat3 transverse_projector(const Vec3& khat);

/// (e1 +- i e2) (x) (e1 +- i e2) / 2 for an orthonormal transverse pair; for
/// khat along z the pair is (x, y).
PolarizationPair polarization_tensors(const Vec3& khat);

/// 1/2 [P_ik P_jl + P_il P_jk - P_ij P_kl] built from the transverse projector.
PolProjector pol_projector(const Vec3& khat);

/// Product rule on the unit sphere: Gauss-Legendre in cos(theta) times a
/// uniform grid in phi, exact for polynomials in khat up to `degree`.
class SphereQuadrature {
 public:
  explicit SphereQuadrature(int degree = 8);

  int degree() const { return degree_; }
  std::size_t size() const { return directions_.size(); }
  const Vec3& direction(std::size_t n) const { return directions_[n]; }
  /// Weights sum to one, so sums are sphere averages.
  double weight(std::size_t n) const { return weights_[n]; }

  /// Weighted sum of f over the nodes. The result type needs `*=` by a scalar
  /// and `+=`.
  template <class F>
  auto average(F&& f) const {
    using R = std::decay_t<decltype(f(directions_[0]))>;
    R acc = f(directions_[0]);
    acc *= weights_[0];
    for (std::size_t n = 1; n < directions_.size(); ++n) {
      R term = f(directions_[n]);
      term *= weights_[n];
      acc += term;
    }
    return acc;
  }

 private:
  int degree_;
  std::vector<Vec3> directions_;
  std::vector<double> weights_;
};

/// Sphere average of pol_projector. Throws std::domain_error if the rule is
/// not exact to degree 4, which the integrand requires.
PolProjector angular_average_pol_projector(const SphereQuadrature& quadrature);

/// (2/5)[1/2 (d_km d_ln + d_kn d_lm) - 1/3 d_kl d_mn].
PolProjector analytic_angular_average();

/// (v_k v_l - delta_kl v^2 / 3) / c^2.
TracelessSymTensor3 q_tensor_classical(const Vec3& v, double c);

/// Exact time derivative of q_tensor_classical along (v, a).
TracelessSymTensor3 q_tensor_rate(const Vec3& v, const Vec3& a, double c);

/// Omega_kl = v_k v_l + 3 v^2 delta_kl.
Mat3 omega_matrix(const Vec3& v);

/// Symmetric PSD square root of omega_matrix from its rank-one-plus-isotropic
/// structure: sqrt(3)|v| on the transverse plane, 2|v| along v.
Mat3 omega_sqrt(const Vec3& v);

}  // namespace gravbath
