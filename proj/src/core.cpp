#include "gravbath/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>
#include <boost/math/special_functions/legendre.hpp>

namespace gravbath {

namespace {

constexpr double kUnitTolerance = 1e-12;

void require_unit(const Vec3& khat, const char* who) {
  const double norm = khat.norm();
  if (!(std::abs(norm - 1.0) <= kUnitTolerance)) {
    throw std::invalid_argument(std::string(who) + ": direction must be a unit vector, got |k| = " +
                                std::to_string(norm));
  }
}

}  // namespace

PhysicalParams::PhysicalParams(double mass, double temperature, double eps2, Units units)
    : mass_(mass), temperature_(temperature), eps2_(eps2), units_(units) {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be non-negative");
  if (!(eps2 >= 0.0)) throw std::invalid_argument("eps2 must be non-negative");
  if (!(units.hbar > 0.0) || !(units.c > 0.0) || !(units.kB > 0.0)) {
    throw std::invalid_argument("hbar, c and kB must be positive");
  }
  gamma_ = eps2_ * mass_ * mass_ * units_.c * units_.c / (10.0 * std::numbers::pi * units_.hbar);
  w_ = 2.0 * gamma_ * units_.kB * temperature_ / units_.hbar;
}

PhysicalParams PhysicalParams::with_gamma(double mass, double temperature, double gamma,
                                          Units units) {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  const double eps2 =
      gamma * 10.0 * std::numbers::pi * units.hbar / (mass * mass * units.c * units.c);
  PhysicalParams p(mass, temperature, eps2, units);
  // Keep the requested gamma bit-exact rather than the round-tripped value.
  p.gamma_ = gamma;
  p.w_ = 2.0 * gamma * units.kB * temperature / units.hbar;
  return p;
}

double PhysicalParams::beta() const {
  if (temperature_ == 0.0) throw std::domain_error("beta is undefined at T = 0");
  return 1.0 / (units_.kB * temperature_);
}

double PhysicalParams::damping_scale() const {
  const double c2 = units_.c * units_.c;
  return gamma_ * units_.hbar / (c2 * c2);
}

TracelessSymTensor3 TracelessSymTensor3::project(const Mat3& m) {
  Mat3 s = 0.5 * (m + m.transpose());
  s.diagonal().array() -= s.trace() / 3.0;
  return TracelessSymTensor3(s);
}

Mat3 PolProjector::apply(const Mat3& t) const {
  Mat3 out = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) out(i, j) += (*this)(i, j, k, l) * t(k, l);
  return out;
}

CMat3 PolProjector::apply(const CMat3& t) const {
  CMat3 out = CMat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) out(i, j) += (*this)(i, j, k, l) * t(k, l);
  return out;
}

PolProjector PolProjector::compose(const PolProjector& other) const {
  PolProjector out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
          double acc = 0.0;
          for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) acc += (*this)(i, j, k, l) * other(k, l, m, n);
          out(i, j, m, n) = acc;
        }
  return out;
}

double PolProjector::max_abs_diff(const PolProjector& other) const {
  double d = 0.0;
  for (std::size_t n = 0; n < data_.size(); ++n) d = std::max(d, std::abs(data_[n] - other.data_[n]));
  return d;
}

double PolProjector::max_abs() const {
  double d = 0.0;
  for (double x : data_) d = std::max(d, std::abs(x));
  return d;
}

PolProjector& PolProjector::operator+=(const PolProjector& other) {
  for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
  return *this;
}

PolProjector& PolProjector::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Mat3 transverse_projector(const Vec3& khat) {
  require_unit(khat, "transverse_projector");
  return Mat3::Identity() - khat * khat.transpose();
}

PolarizationPair polarization_tensors(const Vec3& khat) {
  if (khat.norm() == 0.0) throw std::invalid_argument("polarization_tensors: zero direction");
  require_unit(khat, "polarization_tensors");

  // Seed e1 with the coordinate axis least aligned with khat; ties go to the
  // lowest index so that khat = z gives e1 = x, e2 = y.
  int axis = 0;
  for (int n = 1; n < 3; ++n)
    if (std::abs(khat[n]) < std::abs(khat[axis])) axis = n;
  Vec3 seed = Vec3::Unit(axis);
  Vec3 e1 = (seed - seed.dot(khat) * khat).normalized();
  Vec3 e2 = khat.cross(e1);

  const std::complex<double> i(0.0, 1.0);
  const Eigen::Vector3cd mp = e1.cast<std::complex<double>>() + i * e2.cast<std::complex<double>>();
  const Eigen::Vector3cd mm = e1.cast<std::complex<double>>() - i * e2.cast<std::complex<double>>();
  return {0.5 * mp * mp.transpose(), 0.5 * mm * mm.transpose()};
}

PolProjector pol_projector(const Vec3& khat) {
  const Mat3 p = transverse_projector(khat);
  PolProjector out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          out(i, j, k, l) = 0.5 * (p(i, k) * p(j, l) + p(i, l) * p(j, k) - p(i, j) * p(k, l));
  return out;
}

SphereQuadrature::SphereQuadrature(int degree) : degree_(degree) {
  if (degree < 0) throw std::invalid_argument("SphereQuadrature: degree must be >= 0");
  const int n_theta = std::max(1, (degree + 2) / 2);  // 2n - 1 >= degree
  const int n_phi = degree + 1;

  std::vector<double> nodes;
  std::vector<double> gl_weights;
  for (double x : boost::math::legendre_p_zeros<double>(n_theta)) {
    const double dp = boost::math::legendre_p_prime(n_theta, x);
    const double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes.push_back(x);
    gl_weights.push_back(wgt);
    if (x != 0.0) {
      nodes.push_back(-x);
      gl_weights.push_back(wgt);
    }
  }

  for (std::size_t a = 0; a < nodes.size(); ++a) {
    const double ct = nodes[a];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int b = 0; b < n_phi; ++b) {
      const double phi = 2.0 * std::numbers::pi * (b + 0.5) / n_phi;
      directions_.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      weights_.push_back(0.5 * gl_weights[a] / n_phi);
    }
  }
}

PolProjector angular_average_pol_projector(const SphereQuadrature& quadrature) {
  if (quadrature.degree() < 4) {
    throw std::domain_error("angular_average_pol_projector: quadrature degree " +
                            std::to_string(quadrature.degree()) +
                            " under-resolves the degree-4 integrand");
  }
  // Quadrature nodes are unit vectors only up to rounding; renormalize.
  return quadrature.average([](const Vec3& k) { return pol_projector(k.normalized()); });
}

PolProjector analytic_angular_average() {
  PolProjector out;
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n)
          out(k, l, m, n) =
              0.4 * (0.5 * (d(k, m) * d(l, n) + d(k, n) * d(l, m)) - d(k, l) * d(m, n) / 3.0);
  return out;
}

TracelessSymTensor3 q_tensor_classical(const Vec3& v, double c) {
  return TracelessSymTensor3::project(v * v.transpose() / (c * c));
}

TracelessSymTensor3 q_tensor_rate(const Vec3& v, const Vec3& a, double c) {
  return TracelessSymTensor3::project((a * v.transpose() + v * a.transpose()) / (c * c));
}

Mat3 omega_matrix(const Vec3& v) {
  return v * v.transpose() + 3.0 * v.squaredNorm() * Mat3::Identity();
}

Mat3 omega_sqrt(const Vec3& v) {
  const double speed = v.norm();
  if (speed == 0.0) return Mat3::Zero();
  const Vec3 u = v / speed;
  const Mat3 longitudinal = u * u.transpose();
  return std::sqrt(3.0) * speed * (Mat3::Identity() - longitudinal) + 2.0 * speed * longitudinal;
}

}  // namespace gravbath
