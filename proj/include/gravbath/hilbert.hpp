#pragma once

#include <array>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gravbath/core.hpp"

namespace gravbath::hilbert {

using CMatrix = Eigen::MatrixXcd;
using Occupation = std::array<int, 3>;

enum class Axis { x = 0, y = 1, z = 2 };

std::string to_string(const Occupation& n);

/// Thrown when operators defined on different bases are combined.
class BasisMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Occupation states (n_x, n_y, n_z) with n_x + n_y + n_z <= ncut, ordered by
/// total quanta and lexicographically within a shell.
class FockBasis {
 public:
  /// Throws std::invalid_argument for ncut < 2.
  explicit FockBasis(int ncut);

  int ncut() const { return ncut_; }
  std::size_t dim() const { return states_.size(); }
  const std::vector<Occupation>& states() const { return states_; }
  const Occupation& state(std::size_t i) const { return states_[i]; }

  /// Throws std::out_of_range for labels outside the truncation.
  std::size_t index(const Occupation& n) const;
  bool contains(const Occupation& n) const { return index_.count(n) != 0; }

  static int total(const Occupation& n) { return n[0] + n[1] + n[2]; }
  static std::size_t dimension_for(int ncut) {
    return static_cast<std::size_t>((ncut + 1) * (ncut + 2) * (ncut + 3) / 6);
  }

 private:
  int ncut_;
  std::vector<Occupation> states_;
  std::map<Occupation, std::size_t> index_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

BasisPtr build_basis(int ncut);

/// Dense operator on a FockBasis.
class FockOperator {
 public:
  FockOperator(BasisPtr basis, CMatrix mat, bool hermitian = false);

  const BasisPtr& basis() const { return basis_; }
  const FockBasis& fock_basis() const { return *basis_; }
  const CMatrix& matrix() const { return mat_; }
  bool hermitian() const { return hermitian_; }
  std::size_t dim() const { return static_cast<std::size_t>(mat_.rows()); }

  std::complex<double> element(const Occupation& bra, const Occupation& ket) const;

  /// max |A - A^dagger| / max |A| (0 for the zero operator).
  double hermiticity_defect() const;

  FockOperator adjoint() const;

  FockOperator& operator+=(const FockOperator& other);
  FockOperator& operator-=(const FockOperator& other);
  FockOperator& operator*=(std::complex<double> s);

  friend FockOperator operator+(FockOperator a, const FockOperator& b) { return a += b; }
  friend FockOperator operator-(FockOperator a, const FockOperator& b) { return a -= b; }
  friend FockOperator operator*(const FockOperator& a, const FockOperator& b);
  friend FockOperator operator*(std::complex<double> s, FockOperator a) { return a *= s; }

 private:
  BasisPtr basis_;
  CMatrix mat_;
  bool hermitian_;
};

/// Throws BasisMismatch unless both operators live on equivalent bases.
void require_same_basis(const FockOperator& a, const FockOperator& b);
void require_same_basis(const FockBasis& a, const FockBasis& b);

/// Annihilation operator for one mode: a|n> = sqrt(n)|n - 1>.
FockOperator ladder(const BasisPtr& basis, Axis axis);

/// i sqrt(hbar M omega / 2)(a^dagger - a).
FockOperator momentum(const BasisPtr& basis, Axis axis, const PhysicalParams& params, double omega);

/// Diagonal hbar omega (n_x + n_y + n_z + 3/2).
FockOperator hamiltonian_ho(const BasisPtr& basis, const PhysicalParams& params, double omega);

/// Total number operator.
FockOperator number_operator(const BasisPtr& basis);

/// Matrix elements of p_k p_l. The product is formed on a basis one shell
/// larger and restricted, so every element inside the truncation is exact.
FockOperator momentum_product(const BasisPtr& basis, Axis k, Axis l, const PhysicalParams& params,
                              double omega);

/// Nine components of an operator-valued rank-2 tensor, indexed (k, l).
class TensorFamily {
 public:
  explicit TensorFamily(std::vector<FockOperator> components);

  const FockOperator& operator()(int k, int l) const { return comps_[static_cast<std::size_t>(3 * k + l)]; }
  const BasisPtr& basis() const { return comps_.front().basis(); }
  const std::vector<FockOperator>& components() const { return comps_; }

 private:
  std::vector<FockOperator> comps_;
};

/// q^kl = (p_k p_l - delta_kl p^2 / 3) / (M^2 c^2); Hermitian, with
/// q^xx + q^yy + q^zz = 0 exactly.
TensorFamily q_operator(const BasisPtr& basis, const PhysicalParams& params, double omega);

/// (i / hbar)[H, O]. Throws BasisMismatch.
FockOperator heisenberg_derivative(const FockOperator& H, const FockOperator& O, double hbar);
TensorFamily heisenberg_derivative(const FockOperator& H, const TensorFamily& family, double hbar);

}  // namespace gravbath::hilbert
