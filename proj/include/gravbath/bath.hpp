#pragma once

#include <stdexcept>
#include <vector>

#include "gravbath/core.hpp"

namespace gravbath::bath {

/// Regularized mode integral for the thermal graviton correlation.
struct KernelSpec {
  PhysicalParams params;
  /// Exponential UV cutoff frequency; must be > 0.
  double uv_cutoff;
  /// Gauss-Legendre nodes per panel; must be >= 64.
  int quad_points = 64;
  /// Replace coth(beta hbar omega / 2) by 2 / (beta hbar omega).
  bool classical_limit = false;
};

/// Local weights of the symmetric kernel a(tau) = m0 delta(tau) + m2 delta''(tau).
struct KernelMoments {
  double m0;
  double m2;
  /// Quadrature error estimate, relative to the returned values.
  double rel_error;
};

/// Thrown when the kernel quadrature fails its self-consistency check.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// kB T / (2 pi c^2): weight of delta(t - t') in the high-temperature
/// dissipation kernel. Throws std::domain_error for T = 0.
double kernel_A_coefficient(const PhysicalParams& params);

/// hbar / (2 pi c^2): weight of i d/dt delta(t - t') in the response kernel.
double kernel_C_coefficient(const PhysicalParams& params);

/// One-sided spectral density S(omega) of a(tau) = int_0^inf S(omega) cos(omega tau).
double spectral_density(const KernelSpec& spec, double omega);

/// a(tau) evaluated by quadrature over the mode frequency.
double kernel_time_domain(const KernelSpec& spec, double tau);

/// Local weights of the regularized thermal kernel, both computed by
/// quadrature. m0 is the integral of a(tau); m2 is half the second time moment
/// of the quantum part of a(tau), i.e. the kernel minus its classical-limit
/// counterpart with the same cutoff. The classical kernel is a cutoff-smeared
/// delta and carries no local delta'' weight.
///
/// Throws std::invalid_argument on an invalid spec, std::domain_error for
/// T = 0 and QuadratureError if the quadrature does not converge.
KernelMoments thermal_kernel_moments(const KernelSpec& spec);

}  // namespace gravbath::bath
