#include "gravbath/master.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace gravbath::master {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};
constexpr double kTraceDriftLimit = 1e-8;

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

CMatrix identity(const BasisPtr& basis) { return CMatrix::Identity(as_index(basis->dim()), as_index(basis->dim())); }

void require_family_basis(const FockOperator& H, const TensorFamily& f) {
  for (const auto& c : f.components()) hilbert::require_same_basis(H, c);
}

// sum_kl |<f|O^kl|i>|^2 for every f, as a column over the basis.
Eigen::VectorXd transition_strengths(const TensorFamily& family, std::size_t i) {
  const auto& comps = family.components();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(comps.front().matrix().rows());
  for (const auto& c : comps) s += c.matrix().col(as_index(i)).cwiseAbs2();
  return s;
}

double diagonal_strength(const TensorFamily& family, std::size_t i) {
  double s = 0.0;
  for (const auto& c : family.components()) s += std::norm(c.matrix()(as_index(i), as_index(i)));
  return s;
}

// Transitions f < i with their frequencies and p_k p_l matrix elements.
struct Transition {
  double omega_if;
  CMat3 P;
};

std::vector<Transition> downward_transitions(const Occupation& i, const BasisPtr& basis,
                                             const PhysicalParams& params, double omega) {
  using hilbert::Axis;
  const std::size_t idx = basis->index(i);
  const Axis axes[3] = {Axis::x, Axis::y, Axis::z};
  CMatrix pp[3][3];
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) pp[k][l] = hilbert::momentum_product(basis, axes[k], axes[l], params, omega).matrix();

  std::vector<Transition> out;
  const int Ni = hilbert::FockBasis::total(i);
  for (std::size_t f = 0; f < basis->dim(); ++f) {
    const int Nf = hilbert::FockBasis::total(basis->state(f));
    if (Nf >= Ni) continue;
    Transition t{omega * (Ni - Nf), CMat3::Zero()};
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) t.P(k, l) = pp[k][l](as_index(f), as_index(idx));
    if (t.P.cwiseAbs().maxCoeff() > 0.0) out.push_back(t);
  }
  return out;
}

}  // namespace

DensityMatrix DensityMatrix::from_pure(const BasisPtr& basis, const Occupation& n) {
  const std::size_t idx = basis->index(n);
  CMatrix rho = CMatrix::Zero(as_index(basis->dim()), as_index(basis->dim()));
  rho(as_index(idx), as_index(idx)) = 1.0;
  return DensityMatrix(basis, std::move(rho));
}

DensityMatrix DensityMatrix::from_matrix(const BasisPtr& basis, CMatrix rho) {
  const auto n = as_index(basis->dim());
  if (rho.rows() != n || rho.cols() != n) throw std::invalid_argument("DensityMatrix: size does not match basis");
  DensityMatrix out(basis, std::move(rho));
  if (!out.rho_.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
  if (out.hermiticity_defect() > kHermitianTolerance) throw std::invalid_argument("DensityMatrix: not Hermitian");
  if (std::abs(out.trace() - 1.0) > kTraceTolerance) throw std::invalid_argument("DensityMatrix: trace is not 1");
  if (out.min_eigenvalue() < kEigenvalueFloor) throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  return out;
}

DensityMatrix DensityMatrix::unchecked(const BasisPtr& basis, CMatrix rho) {
  return DensityMatrix(basis, std::move(rho));
}

double DensityMatrix::hermiticity_defect() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
  const CMatrix h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

double DensityMatrix::population(const Occupation& n) const {
  const auto idx = as_index(basis_->index(n));
  return rho_(idx, idx).real();
}

Superoperator::Superoperator(BasisPtr basis, CMatrix mat) : basis_(std::move(basis)), mat_(std::move(mat)) {
  const auto n = as_index(basis_->dim() * basis_->dim());
  if (mat_.rows() != n || mat_.cols() != n) throw hilbert::BasisMismatch("Superoperator: size does not match basis");
}

Superoperator Superoperator::zero(const BasisPtr& basis) {
  const auto n = as_index(basis->dim() * basis->dim());
  return Superoperator(basis, CMatrix::Zero(n, n));
}

Superoperator Superoperator::sandwich(const BasisPtr& basis, const CMatrix& A, const CMatrix& B) {
  return Superoperator(basis, Eigen::kroneckerProduct(B.transpose(), A).eval());
}

Superoperator Superoperator::left(const BasisPtr& basis, const CMatrix& A) {
  return Superoperator(basis, Eigen::kroneckerProduct(identity(basis), A).eval());
}

Superoperator Superoperator::right(const BasisPtr& basis, const CMatrix& B) {
  return Superoperator(basis, Eigen::kroneckerProduct(B.transpose(), identity(basis)).eval());
}

Superoperator Superoperator::commutator(const BasisPtr& basis, const CMatrix& A) {
  return left(basis, A) - right(basis, A);
}

CMatrix Superoperator::apply(const CMatrix& rho) const {
  const auto d = as_index(dim());
  if (rho.rows() != d || rho.cols() != d) throw hilbert::BasisMismatch("Superoperator::apply: size mismatch");
  const Eigen::Map<const Eigen::VectorXcd> v(rho.data(), d * d);
  Eigen::VectorXcd out = mat_ * v;
  return Eigen::Map<CMatrix>(out.data(), d, d);
}

double Superoperator::trace_defect() const {
  const auto d = as_index(dim());
  Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(d * d);
  for (Eigen::Index i = 0; i < d; ++i) row += mat_.row(i * d + i);
  return row.cwiseAbs().maxCoeff();
}

Superoperator& Superoperator::operator+=(const Superoperator& other) {
  hilbert::require_same_basis(*basis_, *other.basis_);
  mat_ += other.mat_;
  return *this;
}

Superoperator& Superoperator::operator-=(const Superoperator& other) {
  hilbert::require_same_basis(*basis_, *other.basis_);
  mat_ -= other.mat_;
  return *this;
}

Superoperator& Superoperator::operator*=(std::complex<double> s) {
  mat_ *= s;
  return *this;
}

LindbladOps LindbladOps::build(const TensorFamily& q, const TensorFamily& qdot, const PhysicalParams& params) {
  const BasisPtr& basis = q.basis();
  for (const auto& c : qdot.components()) hilbert::require_same_basis(q.components().front(), c);
  LindbladOps ops;
  const auto d = as_index(basis->dim());
  if (params.w() == 0.0) {
    if (params.gamma() > 0.0) {
      throw std::domain_error("LindbladOps: L2 is singular at T = 0 with gamma > 0");
    }
    for (int n = 0; n < 9; ++n) {
      ops.L1.emplace_back(basis, CMatrix::Zero(d, d), true);
      ops.L2.emplace_back(basis, CMatrix::Zero(d, d), false);
    }
    return ops;
  }
  const double a = std::sqrt(params.w()) / 2.0;
  const double b = std::sqrt(3.0 * params.w()) / 2.0;
  const double kappa = params.hbar() / (3.0 * params.kB() * params.temperature());
  for (int n = 0; n < 9; ++n) {
    const CMatrix& qm = q.components()[static_cast<std::size_t>(n)].matrix();
    const CMatrix& qd = qdot.components()[static_cast<std::size_t>(n)].matrix();
    ops.L1.emplace_back(basis, (a * qm).eval(), true);
    ops.L2.emplace_back(basis, (b * (qm - kI * kappa * qd)).eval(), false);
  }
  return ops;
}

Superoperator liouvillian_master(const FockOperator& H, const TensorFamily& q, const TensorFamily& qdot,
                                 const PhysicalParams& params, GeneratorTerms terms) {
  require_family_basis(H, q);
  require_family_basis(H, qdot);
  const BasisPtr& basis = H.basis();
  const auto d = as_index(basis->dim());
  Superoperator gen = Superoperator::zero(basis);

  if (terms.hamiltonian) gen += (-kI / params.hbar()) * Superoperator::commutator(basis, H.matrix());

  if (terms.gamma_terms && params.gamma() != 0.0) {
    CMatrix q_qdot = CMatrix::Zero(d, d);
    CMatrix qdot_q = CMatrix::Zero(d, d);
    Superoperator cross = Superoperator::zero(basis);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        const CMatrix& a = q(k, l).matrix();
        const CMatrix& b = qdot(k, l).matrix();
        q_qdot += a * b;
        qdot_q += b * a;
        cross += Superoperator::sandwich(basis, a, b);
        cross -= Superoperator::sandwich(basis, b, a);
      }
    Superoperator g = Superoperator::left(basis, q_qdot) - Superoperator::right(basis, qdot_q) + cross;
    gen += (-kI * (params.gamma() / 2.0)) * g;
  }

  if (terms.w_terms && params.w() != 0.0) {
    const double bh = params.beta() * params.hbar();
    const double quantum = bh * bh / 12.0;
    CMatrix square = CMatrix::Zero(d, d);
    Superoperator sand = Superoperator::zero(basis);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        const CMatrix& a = q(k, l).matrix();
        const CMatrix& b = qdot(k, l).matrix();
        square += a * a + quantum * (b * b);
        sand += Superoperator::sandwich(basis, a, a);
        sand += quantum * Superoperator::sandwich(basis, b, b);
      }
    // [A,[A,rho]] = A^2 rho + rho A^2 - 2 A rho A
    Superoperator dc = Superoperator::left(basis, square) + Superoperator::right(basis, square) - 2.0 * sand;
    gen += cd(-params.w() / 2.0) * dc;
  } else if (terms.w_terms && params.temperature() == 0.0 && params.gamma() > 0.0) {
    throw std::domain_error("liouvillian_master: w terms need T > 0 (beta^2 w diverges as T -> 0)");
  }
  return gen;
}

Superoperator lindblad_generator(const FockOperator& H, const LindbladOps& lops, const PhysicalParams& params) {
  const BasisPtr& basis = H.basis();
  const auto d = as_index(basis->dim());
  Superoperator gen = (-kI / params.hbar()) * Superoperator::commutator(basis, H.matrix());
  CMatrix K = CMatrix::Zero(d, d);
  Superoperator jumps = Superoperator::zero(basis);
  for (const auto* family : {&lops.L1, &lops.L2}) {
    for (const auto& L : *family) {
      hilbert::require_same_basis(H, L);
      const CMatrix& m = L.matrix();
      if (m.cwiseAbs().maxCoeff() == 0.0) continue;
      K += m * m.adjoint();
      jumps += Superoperator::sandwich(basis, m.adjoint(), m);
    }
  }
  gen -= 0.5 * Superoperator::left(basis, K);
  gen -= 0.5 * Superoperator::right(basis, K);
  gen += jumps;
  return gen;
}

Superoperator anticommutator_shift(const TensorFamily& q, const TensorFamily& qdot, const PhysicalParams& params) {
  const BasisPtr& basis = q.basis();
  const auto d = as_index(basis->dim());
  CMatrix anti = CMatrix::Zero(d, d);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      hilbert::require_same_basis(q(k, l), qdot(k, l));
      anti += q(k, l).matrix() * qdot(k, l).matrix() + qdot(k, l).matrix() * q(k, l).matrix();
    }
  return (-kI * (params.gamma() / 4.0)) * Superoperator::commutator(basis, anti);
}

std::vector<Trajectory> evolve_many(const std::vector<DensityMatrix>& rho0, const Superoperator& gen,
                                    double t_final, double dt, Method method, int sample_every) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
  if (!(t_final >= 0.0)) throw std::invalid_argument("evolve: t_final must be non-negative");
  if (sample_every < 1) throw std::invalid_argument("evolve: sample_every must be >= 1");
  const BasisPtr& basis = gen.basis();
  const auto d = as_index(basis->dim());
  const auto cols = as_index(rho0.size());

  Eigen::MatrixXcd X(d * d, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const DensityMatrix& r = rho0[static_cast<std::size_t>(c)];
    hilbert::require_same_basis(*basis, *r.basis());
    X.col(c) = Eigen::Map<const Eigen::VectorXcd>(r.matrix().data(), d * d);
  }

  auto traces = [&](const Eigen::MatrixXcd& Y) {
    Eigen::RowVectorXcd t = Eigen::RowVectorXcd::Zero(cols);
    for (Eigen::Index i = 0; i < d; ++i) t += Y.row(i * d + i);
    return t;
  };
  const Eigen::RowVectorXcd trace0 = traces(X);

  std::vector<Trajectory> out(rho0.size());
  auto record = [&](double t) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      auto& traj = out[static_cast<std::size_t>(c)];
      traj.times.push_back(t);
      Eigen::VectorXcd v = X.col(c);
      traj.states.push_back(DensityMatrix::unchecked(basis, Eigen::Map<CMatrix>(v.data(), d, d)));
    }
  };

  const long long n_steps = t_final == 0.0 ? 0 : static_cast<long long>(std::ceil(t_final / dt * (1.0 - 1e-12)));
  const double h = n_steps == 0 ? 0.0 : t_final / static_cast<double>(n_steps);
  const CMatrix& L = gen.matrix();
  CMatrix propagator;
  if (method == Method::expm && n_steps > 0) propagator = (L * cd(h)).exp();

  record(0.0);
  for (long long step = 1; step <= n_steps; ++step) {
    if (method == Method::rk4) {
      const Eigen::MatrixXcd k1 = L * X;
      const Eigen::MatrixXcd k2 = L * (X + (0.5 * h) * k1);
      const Eigen::MatrixXcd k3 = L * (X + (0.5 * h) * k2);
      const Eigen::MatrixXcd k4 = L * (X + h * k3);
      X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      X = (propagator * X).eval();
    }
    const double t = h * static_cast<double>(step);
    if (!X.allFinite()) throw EvolutionError("evolve: non-finite state at t = " + std::to_string(t));
    const double drift = (traces(X) - trace0).cwiseAbs().maxCoeff();
    if (drift > kTraceDriftLimit) {
      throw EvolutionError("evolve: trace drift " + std::to_string(drift) + " at t = " + std::to_string(t) +
                           "; reduce dt (h * |gen| = " + std::to_string(h * gen.max_abs()) + ")");
    }
    if (step % sample_every == 0 || step == n_steps) record(t);
  }
  return out;
}

Trajectory evolve(const DensityMatrix& rho0, const Superoperator& gen, double t_final, double dt, Method method,
                  int sample_every) {
  return std::move(evolve_many({rho0}, gen, t_final, dt, method, sample_every).front());
}

double default_time_step(const PhysicalParams& params, double omega) {
  return 0.02 / (omega + params.w() + params.gamma() * omega);
}

EmissionBalance emission_balance(const Occupation& i, const TensorFamily& q, const PhysicalParams& params,
                                 double omega) {
  const BasisPtr& basis = q.basis();
  const std::size_t idx = basis->index(i);
  const Eigen::VectorXd s = transition_strengths(q, idx);
  const int Ni = hilbert::FockBasis::total(i);
  double lower = 0.0;
  double upper = 0.0;
  for (std::size_t f = 0; f < basis->dim(); ++f) {
    const int Nf = hilbert::FockBasis::total(basis->state(f));
    const double omega_if = omega * (Ni - Nf);
    if (Nf < Ni) lower += omega_if * s[as_index(f)];
    if (Nf > Ni) upper += omega_if * s[as_index(f)];
  }
  lower *= params.gamma();
  upper *= params.gamma();
  const double spontaneous = 2.0 * lower;
  return {spontaneous, lower, upper, -spontaneous + lower - upper};
}

double spontaneous_rate(const Occupation& i, const TensorFamily& q, const PhysicalParams& params, double omega) {
  return emission_balance(i, q, params, omega).spontaneous;
}

double golden_rule_rate(const Occupation& i, const BasisPtr& basis, const PhysicalParams& params, double omega,
                        const SphereQuadrature& quadrature) {
  if (quadrature.degree() < 4) {
    throw std::domain_error("golden_rule_rate: quadrature degree " + std::to_string(quadrature.degree()) +
                            " under-resolves the degree-4 angular integrand");
  }
  const auto transitions = downward_transitions(i, basis, params, omega);
  if (transitions.empty()) return 0.0;
  const double mean = quadrature.average([&](const Vec3& k) {
    const PolarizationPair eps = polarization_tensors(k.normalized());
    double acc = 0.0;
    for (const auto& t : transitions) {
      const cd plus = eps.plus.cwiseProduct(t.P).sum();
      const cd minus = eps.minus.cwiseProduct(t.P).sum();
      acc += t.omega_if * (std::norm(plus) + std::norm(minus));
    }
    return acc;
  });
  const double solid_angle = 4.0 * std::numbers::pi * mean;
  const double c2 = params.c() * params.c();
  const double M2 = params.mass() * params.mass();
  return params.eps2() / (8.0 * std::numbers::pi * std::numbers::pi * params.hbar()) / (c2 * M2) * solid_angle;
}

double golden_rule_closed_form(const Occupation& i, const BasisPtr& basis, const PhysicalParams& params,
                               double omega) {
  double sum = 0.0;
  for (const auto& t : downward_transitions(i, basis, params, omega)) {
    CMat3 traceless = t.P;
    traceless.diagonal().array() -= t.P.trace() / 3.0;
    sum += t.omega_if * traceless.cwiseAbs2().sum();
  }
  const double c2 = params.c() * params.c();
  const double M2 = params.mass() * params.mass();
  return params.eps2() / (2.0 * std::numbers::pi * params.hbar()) * 2.0 / (5.0 * c2 * M2) * sum;
}

double diagonal_rate(const Occupation& i, const Superoperator& gen) {
  const auto d = as_index(gen.dim());
  const auto idx = as_index(gen.basis()->index(i));
  return gen.matrix()(idx * d + idx, idx * d + idx).real();
}

double induced_rate(const Occupation& i, const TensorFamily& q, const TensorFamily& qdot,
                    const PhysicalParams& params) {
  if (params.w() == 0.0) return 0.0;
  const std::size_t idx = q.basis()->index(i);
  const double classical = transition_strengths(q, idx).sum() - diagonal_strength(q, idx);
  const double bh = params.beta() * params.hbar();
  const double quantum = transition_strengths(qdot, idx).sum() - diagonal_strength(qdot, idx);
  return params.w() * (classical + bh * bh / 12.0 * quantum);
}

}  // namespace gravbath::master
