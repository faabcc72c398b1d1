#pragma once

// Reference constructions used only by the tests. They take deliberately
// different routes from the library: plane-polarization bases instead of the
// transverse-projector formula, a full tensor-product Fock space instead of
// the truncated basis, and superoperators assembled column by column.

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gravbath/core.hpp"
#include "gravbath/hilbert.hpp"

namespace oracle {

using gravbath::Mat3;
using gravbath::Vec3;
using CMatrix = Eigen::MatrixXcd;
using cplx = std::complex<double>;

using Rank4 = std::array<double, 81>;

inline double& at(Rank4& t, int i, int j, int k, int l) { return t[((i * 3 + j) * 3 + k) * 3 + l]; }
inline double at(const Rank4& t, int i, int j, int k, int l) { return t[((i * 3 + j) * 3 + k) * 3 + l]; }

// Orthonormal pair transverse to k via Gram-Schmidt against the axis least
// aligned with k.
inline std::pair<Vec3, Vec3> transverse_pair(const Vec3& k) {
  Vec3 seed = Vec3::UnitX();
  if (std::abs(k.y()) < std::abs(k.x()) && std::abs(k.y()) <= std::abs(k.z())) seed = Vec3::UnitY();
  else if (std::abs(k.z()) < std::abs(k.x())) seed = Vec3::UnitZ();
  Vec3 e1 = seed - seed.dot(k) * k;
  e1.normalize();
  Vec3 e2(k.y() * e1.z() - k.z() * e1.y(), k.z() * e1.x() - k.x() * e1.z(), k.x() * e1.y() - k.y() * e1.x());
  return {e1, e2};
}

// Sum over the plus and cross linear polarizations, each normalized to unit
// Frobenius norm.
inline Rank4 projector_from_linear_polarizations(const Vec3& k) {
  auto [e1, e2] = transverse_pair(k);
  const Mat3 plus = (e1 * e1.transpose() - e2 * e2.transpose()) / std::sqrt(2.0);
  const Mat3 cross = (e1 * e2.transpose() + e2 * e1.transpose()) / std::sqrt(2.0);
  Rank4 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) at(r, i, j, a, b) = plus(i, j) * plus(a, b) + cross(i, j) * cross(a, b);
  return r;
}

// Three-point Gauss rule in cos(theta) times six equally spaced azimuths;
// exact for polynomials of degree five on the sphere.
template <class F>
Rank4 sphere_average(F&& f) {
  const double x[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  Rank4 acc{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 6; ++b) {
      const double phi = 2.0 * std::numbers::pi * b / 6.0;
      const double s = std::sqrt(1.0 - x[a] * x[a]);
      const Rank4 v = f(Vec3(s * std::cos(phi), s * std::sin(phi), x[a]));
      for (std::size_t n = 0; n < 81; ++n) acc[n] += 0.5 * w[a] / 6.0 * v[n];
    }
  return acc;
}

inline Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

// Quadrupole operators on the full product space {0..nmax}^3, with nmax two
// above the truncation so that p_k p_l is exact on the truncated shells, then
// restricted to the library basis.
struct ProductSpaceModel {
  int nmax;
  std::map<std::array<int, 3>, int> index;
  std::array<CMatrix, 3> p;

  ProductSpaceModel(int ncut, double hbar, double mass, double omega) : nmax(ncut + 2) {
    const int n1 = nmax + 1;
    CMatrix a = CMatrix::Zero(n1, n1);
    for (int n = 1; n < n1; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const CMatrix p1 = cplx(0.0, std::sqrt(hbar * mass * omega / 2.0)) * (a.adjoint() - a);
    const CMatrix id = CMatrix::Identity(n1, n1);
    // index = nx * n1^2 + ny * n1 + nz
    p[0] = kron(p1, kron(id, id));
    p[1] = kron(id, kron(p1, id));
    p[2] = kron(id, kron(id, p1));
    for (int x = 0; x < n1; ++x)
      for (int y = 0; y < n1; ++y)
        for (int z = 0; z < n1; ++z) index[{x, y, z}] = (x * n1 + y) * n1 + z;
  }

  static CMatrix kron(const CMatrix& A, const CMatrix& B) {
    CMatrix r(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j) r.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return r;
  }

  // q^kl restricted to the given occupation list, in that order.
  CMatrix q(int k, int l, const std::vector<std::array<int, 3>>& states, double mass, double c) const {
    CMatrix full = p[k] * p[l];
    if (k == l) full -= (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 3.0;
    full /= mass * mass * c * c;
    const auto d = static_cast<Eigen::Index>(states.size());
    CMatrix r(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) r(i, j) = full(index.at(states[i]), index.at(states[j]));
    return r;
  }
};

// Matrix of a linear map on d x d matrices in column-stacked convention,
// assembled by applying it to each matrix unit.
inline CMatrix superoperator_columns(const std::function<CMatrix(const CMatrix&)>& f, Eigen::Index d) {
  CMatrix S(d * d, d * d);
  for (Eigen::Index b = 0; b < d; ++b)
    for (Eigen::Index a = 0; a < d; ++a) {
      CMatrix E = CMatrix::Zero(d, d);
      E(a, b) = 1.0;
      const CMatrix out = f(E);
      S.col(b * d + a) = Eigen::Map<const Eigen::VectorXcd>(out.data(), d * d);
    }
  return S;
}

inline CMatrix comm(const CMatrix& A, const CMatrix& B) { return A * B - B * A; }

struct GeneratorInputs {
  CMatrix H;
  std::vector<CMatrix> q;
  std::vector<CMatrix> qd;
  double hbar, gamma, w, beta;
};

// Right-hand side of the quadrupole master equation written out term by term.
inline CMatrix master_rhs(const CMatrix& rho, const GeneratorInputs& in) {
  const cplx I(0.0, 1.0);
  CMatrix out = -I / in.hbar * comm(in.H, rho);
  for (std::size_t n = 0; n < in.q.size(); ++n) {
    const CMatrix& q = in.q[n];
    const CMatrix& d = in.qd[n];
    out += -I * (in.gamma / 2.0) * (q * d * rho - rho * d * q + q * rho * d - d * rho * q);
    out += -(in.w / 2.0) *
           (comm(q, comm(q, rho)) + (in.beta * in.beta * in.hbar * in.hbar / 12.0) * comm(d, comm(d, rho)));
  }
  return out;
}

// Lindblad form with the two jump families, written as D[L] rho.
inline CMatrix lindblad_rhs(const CMatrix& rho, const GeneratorInputs& in) {
  const cplx I(0.0, 1.0);
  CMatrix out = -I / in.hbar * comm(in.H, rho);
  const double kT = 1.0 / in.beta;
  for (std::size_t n = 0; n < in.q.size(); ++n) {
    const CMatrix L1 = std::sqrt(in.w) / 2.0 * in.q[n];
    const CMatrix L2 = std::sqrt(3.0 * in.w) / 2.0 * (in.q[n] - I * in.hbar / (3.0 * kT) * in.qd[n]);
    for (const CMatrix* L : {&L1, &L2}) {
      const CMatrix LLd = (*L) * L->adjoint();
      out += L->adjoint() * rho * (*L) - 0.5 * (LLd * rho + rho * LLd);
    }
  }
  return out;
}

// Random mixed state supported on the first `support` basis vectors.
inline CMatrix random_density(Eigen::Index dim, Eigen::Index support, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  CMatrix G = CMatrix::Zero(dim, support);
  for (Eigen::Index i = 0; i < support; ++i)
    for (Eigen::Index j = 0; j < support; ++j) G(i, j) = cplx(n(rng), n(rng));
  CMatrix rho = G * G.adjoint();
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

// Radiated power on a circular orbit of radius r and angular frequency omega:
// -2 (gamma hbar / c^4) omega^6 r^4.
inline double circular_orbit_power(double damping_scale, double omega, double r) {
  return -2.0 * damping_scale * std::pow(omega, 6) * std::pow(r, 4);
}

// Spontaneous rate of (2,0,0) from the x-mode ladder algebra alone:
// <0|p_x^2|2> = -sqrt(2) hbar M omega / 2 and only the N = 0 shell lies below.
inline double gamma_200_ladder(double gamma, double hbar, double mass, double omega, double c) {
  const double px2 = -std::sqrt(2.0) * hbar * mass * omega / 2.0;
  const double diag = (2.0 / 3.0) * px2 / (mass * mass * c * c);
  const double off = (-1.0 / 3.0) * px2 / (mass * mass * c * c);
  const double sum = diag * diag + 2.0 * off * off;
  return 2.0 * gamma * (2.0 * omega) * sum;
}

}  // namespace oracle
