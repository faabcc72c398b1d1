#pragma once

#include <stdexcept>
#include <vector>

#include "gravbath/core.hpp"
#include "gravbath/hilbert.hpp"

namespace gravbath::master {

using hilbert::BasisPtr;
using hilbert::CMatrix;
using hilbert::FockOperator;
using hilbert::Occupation;
using hilbert::TensorFamily;

/// Hermitian, unit-trace, positive semidefinite matrix on a FockBasis.
class DensityMatrix {
 public:
  static constexpr double kHermitianTolerance = 1e-12;
  static constexpr double kTraceTolerance = 1e-12;
  static constexpr double kEigenvalueFloor = -1e-10;

  /// |n><n| for an occupation label.
  static DensityMatrix from_pure(const BasisPtr& basis, const Occupation& n);
  /// Validates the density-matrix invariants; throws std::invalid_argument.
  static DensityMatrix from_matrix(const BasisPtr& basis, CMatrix rho);
  /// No validation. Used for integrator output, whose invariants are
  /// monitored by the caller.
  static DensityMatrix unchecked(const BasisPtr& basis, CMatrix rho);

  const BasisPtr& basis() const { return basis_; }
  const CMatrix& matrix() const { return rho_; }

  std::complex<double> trace() const { return rho_.trace(); }
  /// max |rho - rho^dagger|
  double hermiticity_defect() const;
  /// Smallest eigenvalue of the Hermitian part.
  double min_eigenvalue() const;
  double purity() const;
  double population(const Occupation& n) const;

 private:
  DensityMatrix(BasisPtr basis, CMatrix rho) : basis_(std::move(basis)), rho_(std::move(rho)) {}
  BasisPtr basis_;
  CMatrix rho_;
};

/// Linear map on column-stacked density matrices: vec(A rho B) = (B^T kron A) vec(rho).
class Superoperator {
 public:
  Superoperator(BasisPtr basis, CMatrix mat);

  static Superoperator zero(const BasisPtr& basis);
  /// rho -> A rho B
  static Superoperator sandwich(const BasisPtr& basis, const CMatrix& A, const CMatrix& B);
  /// rho -> A rho
  static Superoperator left(const BasisPtr& basis, const CMatrix& A);
  /// rho -> rho B
  static Superoperator right(const BasisPtr& basis, const CMatrix& B);
  /// rho -> A rho - rho A
  static Superoperator commutator(const BasisPtr& basis, const CMatrix& A);

  const BasisPtr& basis() const { return basis_; }
  const CMatrix& matrix() const { return mat_; }
  std::size_t dim() const { return basis_->dim(); }

  CMatrix apply(const CMatrix& rho) const;

  /// max_j |sum_i L(ii, j)|: how far the generator is from annihilating the
  /// trace functional.
  double trace_defect() const;
  double max_abs() const { return mat_.cwiseAbs().maxCoeff(); }

  Superoperator& operator+=(const Superoperator& other);
  Superoperator& operator-=(const Superoperator& other);
  Superoperator& operator*=(std::complex<double> s);
  friend Superoperator operator+(Superoperator a, const Superoperator& b) { return a += b; }
  friend Superoperator operator-(Superoperator a, const Superoperator& b) { return a -= b; }
  friend Superoperator operator*(std::complex<double> s, Superoperator a) { return a *= s; }

 private:
  BasisPtr basis_;
  CMatrix mat_;
};

/// L1^kl = (sqrt(w)/2) q^kl, L2^kl = (sqrt(3w)/2)(q^kl - i hbar/(3 kB T) qdot^kl),
/// for all nine (k, l).
struct LindbladOps {
  std::vector<FockOperator> L1;
  std::vector<FockOperator> L2;

  /// Throws std::domain_error for T = 0 with gamma > 0, where L2 is singular.
  /// For w = 0 both families are zero.
  static LindbladOps build(const TensorFamily& q, const TensorFamily& qdot, const PhysicalParams& params);
};

/// Selects terms of the master equation generator.
struct GeneratorTerms {
  bool hamiltonian = true;
  bool gamma_terms = true;
  bool w_terms = true;
};

/// -(i/hbar)[H, .] - i(gamma/2)(q qdot rho - rho qdot q + q rho qdot - qdot rho q)
/// - (w/2){[q,[q,rho]] + (beta^2 hbar^2/12)[qdot,[qdot,rho]]}, summed over k, l.
/// The w terms need T > 0 unless w = 0. Throws hilbert::BasisMismatch.
Superoperator liouvillian_master(const FockOperator& H, const TensorFamily& q, const TensorFamily& qdot,
                                 const PhysicalParams& params, GeneratorTerms terms = {});

/// -(i/hbar)[H, .] - sum (1/2 L L^dagger rho + 1/2 rho L L^dagger - L^dagger rho L).
Superoperator lindblad_generator(const FockOperator& H, const LindbladOps& lops, const PhysicalParams& params);

/// -(i gamma/4) sum_kl [{q^kl, qdot^kl}, .], the Hamiltonian-like term by which
/// the master equation exceeds the Lindblad form.
Superoperator anticommutator_shift(const TensorFamily& q, const TensorFamily& qdot, const PhysicalParams& params);

enum class Method { rk4, expm };

/// Thrown when the integrator leaves its stability envelope.
class EvolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
};

/// Integrates d rho/dt = gen(rho) from 0 to t_final with n = ceil(t_final/dt)
/// equal steps, so the last sample lands on t_final exactly. States are
/// recorded at t = 0, every sample_every steps, and at the final time. The
/// expm method propagates with exp(gen h) by scaling and squaring.
///
/// Throws std::invalid_argument for dt <= 0 or t_final < 0 and EvolutionError
/// when the trace drifts by more than 1e-8 or the state becomes non-finite.
Trajectory evolve(const DensityMatrix& rho0, const Superoperator& gen, double t_final, double dt,
                  Method method = Method::rk4, int sample_every = 1);

/// evolve for several initial states advanced together as one block. Agrees
/// with separate evolve calls up to rounding.
std::vector<Trajectory> evolve_many(const std::vector<DensityMatrix>& rho0, const Superoperator& gen,
                                    double t_final, double dt, Method method = Method::rk4,
                                    int sample_every = 1);

/// Default step 0.02 / (omega + w + gamma omega).
double default_time_step(const PhysicalParams& params, double omega);

/// Gamma = 2 gamma sum_{f<i} omega_if sum_kl |<f|q^kl|i>|^2 with oscillator
/// energies hbar omega (N + 3/2). Degenerate shells are summed in full.
double spontaneous_rate(const Occupation& i, const TensorFamily& q, const PhysicalParams& params, double omega);

/// Golden-rule emission rate with the angular integral over graviton
/// directions evaluated on the given quadrature and polarization tensors.
/// Throws std::domain_error for quadrature degree < 4.
double golden_rule_rate(const Occupation& i, const BasisPtr& basis, const PhysicalParams& params, double omega,
                        const SphereQuadrature& quadrature);

/// Closed form of the same rate after the angular average:
/// (eps^2 / 2 pi hbar)(2 / 5 c^2 M^2) sum_{f<i} omega_if |<f|p_k p_l - p^2 delta_kl/3|i>|^2.
double golden_rule_closed_form(const Occupation& i, const BasisPtr& basis, const PhysicalParams& params,
                               double omega);

/// d/dt <i|rho|i> at t = 0 for rho(0) = |i><i|.
double diagonal_rate(const Occupation& i, const Superoperator& gen);

/// The gamma-term population change split by final-state energy:
/// sum_f = -gamma sum_{f != i} omega_if |q_if|^2 = -Gamma + lower - upper with
/// lower = gamma sum_{f<i} omega_if |q_if|^2 and upper = gamma sum_{f>i} omega_if |q_if|^2.
struct EmissionBalance {
  double spontaneous;
  double lower;
  double upper;
  double total;
};

EmissionBalance emission_balance(const Occupation& i, const TensorFamily& q, const PhysicalParams& params,
                                 double omega);

/// Induced loss rate w{ sum_f |q_if|^2 - |q_ii|^2 + (beta^2 hbar^2/12)[sum_f |qdot_if|^2 - |qdot_ii|^2] }
/// summed over k, l. The w-term population change is its negative. Zero when w = 0.
double induced_rate(const Occupation& i, const TensorFamily& q, const TensorFamily& qdot,
                    const PhysicalParams& params);

}  // namespace gravbath::master
