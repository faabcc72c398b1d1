#include "gravbath/hilbert.hpp"

#include <algorithm>
#include <cmath>

namespace gravbath::hilbert {

std::string to_string(const Occupation& n) {
  return "(" + std::to_string(n[0]) + "," + std::to_string(n[1]) + "," + std::to_string(n[2]) + ")";
}

FockBasis::FockBasis(int ncut) : ncut_(ncut) {
  if (ncut < 2) {
    throw std::invalid_argument("FockBasis: ncut must be >= 2 (quadrupole transitions move two quanta), got " +
                                std::to_string(ncut));
  }
  for (int shell = 0; shell <= ncut; ++shell)
    for (int nx = 0; nx <= shell; ++nx)
      for (int ny = 0; ny <= shell - nx; ++ny) states_.push_back({nx, ny, shell - nx - ny});
  for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
}

std::size_t FockBasis::index(const Occupation& n) const {
  auto it = index_.find(n);
  if (it == index_.end()) {
    throw std::out_of_range("state " + to_string(n) + " outside basis with ncut = " + std::to_string(ncut_));
  }
  return it->second;
}

BasisPtr build_basis(int ncut) { return std::make_shared<const FockBasis>(ncut); }

FockOperator::FockOperator(BasisPtr basis, CMatrix mat, bool hermitian)
    : basis_(std::move(basis)), mat_(std::move(mat)), hermitian_(hermitian) {
  const auto n = static_cast<Eigen::Index>(basis_->dim());
  if (mat_.rows() != n || mat_.cols() != n) throw BasisMismatch("FockOperator: matrix size does not match basis");
}

std::complex<double> FockOperator::element(const Occupation& bra, const Occupation& ket) const {
  return mat_(static_cast<Eigen::Index>(basis_->index(bra)), static_cast<Eigen::Index>(basis_->index(ket)));
}

double FockOperator::hermiticity_defect() const {
  const double scale = mat_.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() / scale;
}

FockOperator FockOperator::adjoint() const { return FockOperator(basis_, mat_.adjoint(), hermitian_); }

FockOperator& FockOperator::operator+=(const FockOperator& other) {
  require_same_basis(*this, other);
  mat_ += other.mat_;
  hermitian_ = hermitian_ && other.hermitian_;
  return *this;
}

FockOperator& FockOperator::operator-=(const FockOperator& other) {
  require_same_basis(*this, other);
  mat_ -= other.mat_;
  hermitian_ = hermitian_ && other.hermitian_;
  return *this;
}

FockOperator& FockOperator::operator*=(std::complex<double> s) {
  mat_ *= s;
  hermitian_ = hermitian_ && s.imag() == 0.0;
  return *this;
}

FockOperator operator*(const FockOperator& a, const FockOperator& b) {
  require_same_basis(a, b);
  return FockOperator(a.basis_, a.mat_ * b.mat_, false);
}

void require_same_basis(const FockBasis& a, const FockBasis& b) {
  if (a.ncut() != b.ncut()) {
    throw BasisMismatch("operators live on different bases (ncut " + std::to_string(a.ncut()) + " vs " +
                        std::to_string(b.ncut()) + ")");
  }
}

void require_same_basis(const FockOperator& a, const FockOperator& b) {
  if (a.basis() != b.basis()) require_same_basis(*a.basis(), *b.basis());
}

FockOperator ladder(const BasisPtr& basis, Axis axis) {
  const auto ax = static_cast<int>(axis);
  CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(basis->dim()), static_cast<Eigen::Index>(basis->dim()));
  for (std::size_t col = 0; col < basis->dim(); ++col) {
    Occupation n = basis->state(col);
    if (n[ax] == 0) continue;
    const double amp = std::sqrt(static_cast<double>(n[ax]));
    n[ax] -= 1;
    a(static_cast<Eigen::Index>(basis->index(n)), static_cast<Eigen::Index>(col)) = amp;
  }
  return FockOperator(basis, std::move(a), false);
}

FockOperator momentum(const BasisPtr& basis, Axis axis, const PhysicalParams& params, double omega) {
  const CMatrix a = ladder(basis, axis).matrix();
  const double scale = std::sqrt(params.hbar() * params.mass() * omega / 2.0);
  CMatrix p = std::complex<double>(0.0, scale) * (a.adjoint() - a);
  return FockOperator(basis, std::move(p), true);
}

FockOperator hamiltonian_ho(const BasisPtr& basis, const PhysicalParams& params, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("hamiltonian_ho: omega must be positive");
  const auto n = static_cast<Eigen::Index>(basis->dim());
  CMatrix h = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = params.hbar() * omega * (FockBasis::total(basis->state(static_cast<std::size_t>(i))) + 1.5);
  }
  return FockOperator(basis, std::move(h), true);
}

FockOperator number_operator(const BasisPtr& basis) {
  const auto n = static_cast<Eigen::Index>(basis->dim());
  CMatrix m = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = FockBasis::total(basis->state(static_cast<std::size_t>(i)));
  return FockOperator(basis, std::move(m), true);
}

FockOperator momentum_product(const BasisPtr& basis, Axis k, Axis l, const PhysicalParams& params,
                              double omega) {
  // Shells are contiguous in the ordering, so the original basis is the
  // leading block of the extended one.
  const BasisPtr extended = build_basis(basis->ncut() + 1);
  const CMatrix pk = momentum(extended, k, params, omega).matrix();
  const CMatrix pl = momentum(extended, l, params, omega).matrix();
  const auto n = static_cast<Eigen::Index>(basis->dim());
  CMatrix prod = (pk * pl).topLeftCorner(n, n);
  if (k == l) prod = 0.5 * (prod + prod.adjoint()).eval();
  return FockOperator(basis, std::move(prod), k == l);
}

TensorFamily::TensorFamily(std::vector<FockOperator> components) : comps_(std::move(components)) {
  if (comps_.size() != 9) throw std::invalid_argument("TensorFamily: expected 9 components");
  for (const auto& c : comps_) require_same_basis(comps_.front(), c);
}

TensorFamily q_operator(const BasisPtr& basis, const PhysicalParams& params, double omega) {
  const double norm = 1.0 / (params.mass() * params.mass() * params.c() * params.c());
  const Axis axes[3] = {Axis::x, Axis::y, Axis::z};

  CMatrix pp[3][3];
  for (int k = 0; k < 3; ++k)
    for (int l = k; l < 3; ++l) pp[k][l] = momentum_product(basis, axes[k], axes[l], params, omega).matrix();
  // p_k p_l and p_l p_k agree exactly in the infinite space; average the two
  // orders to keep rounding symmetric.
  for (int k = 0; k < 3; ++k)
    for (int l = k + 1; l < 3; ++l) {
      pp[k][l] = 0.5 * (pp[k][l] + pp[k][l].adjoint()).eval();
      pp[l][k] = pp[k][l];
    }

  const CMatrix p2 = pp[0][0] + pp[1][1] + pp[2][2];
  std::vector<CMatrix> q(9);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      CMatrix m = pp[k][l];
      if (k == l) m -= p2 / 3.0;
      q[static_cast<std::size_t>(3 * k + l)] = norm * m;
    }
  q[8] = -(q[0] + q[4]);

  std::vector<FockOperator> ops;
  ops.reserve(9);
  for (auto& m : q) ops.emplace_back(basis, std::move(m), true);
  return TensorFamily(std::move(ops));
}

FockOperator heisenberg_derivative(const FockOperator& H, const FockOperator& O, double hbar) {
  require_same_basis(H, O);
  const CMatrix comm = H.matrix() * O.matrix() - O.matrix() * H.matrix();
  return FockOperator(H.basis(), std::complex<double>(0.0, 1.0 / hbar) * comm, H.hermitian() && O.hermitian());
}

TensorFamily heisenberg_derivative(const FockOperator& H, const TensorFamily& family, double hbar) {
  std::vector<FockOperator> out;
  out.reserve(9);
  for (const auto& c : family.components()) out.push_back(heisenberg_derivative(H, c, hbar));
  return TensorFamily(std::move(out));
}

}  // namespace gravbath::hilbert
