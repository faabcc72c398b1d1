#include <numbers>

#include <doctest.h>

#include "gravbath/bath.hpp"

using namespace gravbath;
using namespace gravbath::bath;

namespace {

constexpr double kPi = std::numbers::pi;

// Classical-limit kernel with an exponential cutoff Lambda:
// (hbar / 4 pi^2 c^2)(2 kB T / hbar) Lambda / (1 + Lambda^2 tau^2).
double classical_kernel(const PhysicalParams& p, double cutoff, double tau) {
  const double n = p.hbar() / (4.0 * kPi * kPi * p.c() * p.c());
  return n * 2.0 / (p.beta() * p.hbar()) * cutoff / (1.0 + cutoff * cutoff * tau * tau);
}

}  // namespace

TEST_CASE("kernel coefficients") {
  const PhysicalParams p(1.0, 2.0, 0.1, Units{0.5, 3.0, 1.5});
  CHECK(kernel_A_coefficient(p) == doctest::Approx(1.5 * 2.0 / (2.0 * kPi * 9.0)).epsilon(1e-15));
  CHECK(kernel_C_coefficient(p) == doctest::Approx(0.5 / (2.0 * kPi * 9.0)).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_A_coefficient(PhysicalParams(1.0, 0.0, 0.1)), std::domain_error);
}

TEST_CASE("spectral density limits") {
  const PhysicalParams p(1.0, 1.0, 0.1);
  const KernelSpec quantum{p, 10.0, 64, false};
  const KernelSpec classical{p, 10.0, 64, true};
  CHECK(spectral_density(quantum, 1e-6) == doctest::Approx(spectral_density(classical, 1e-6)).epsilon(1e-10));
  CHECK(spectral_density(quantum, 3.0) > spectral_density(classical, 3.0));
  // coth(x/2) x/2 grows like x/2 for large x
  const double n = 1.0 / (4.0 * kPi * kPi);
  const double big = 50.0;
  CHECK(spectral_density(quantum, big) == doctest::Approx(n * big * std::exp(-big / 10.0)).epsilon(1e-12));

  const KernelSpec cold{PhysicalParams(1.0, 0.0, 0.1), 10.0, 64, false};
  CHECK(spectral_density(cold, 2.0) == doctest::Approx(n * 2.0 * std::exp(-0.2)));
}

TEST_CASE("time-domain kernel matches the closed classical form") {
  const PhysicalParams p(1.0, 1.0, 0.1);
  const KernelSpec spec{p, 5.0, 64, true};
  for (double tau : {0.0, 0.05, 0.3, 1.0, 4.0}) {
    CHECK(kernel_time_domain(spec, tau) == doctest::Approx(classical_kernel(p, 5.0, tau)).epsilon(1e-8));
  }
  const KernelSpec q{p, 5.0, 64, false};
  CHECK(kernel_time_domain(q, 0.7) == doctest::Approx(kernel_time_domain(q, -0.7)));
}

TEST_CASE("kernel moments in the high-temperature regime") {
  for (const Units u : {Units{}, Units{0.3, 2.0, 1.7}}) {
    const PhysicalParams p(1.0, 4.0, 0.1, u);
    const double bh = p.beta() * p.hbar();
    const KernelSpec spec{p, 0.05 / bh, 64, false};
    const auto m = thermal_kernel_moments(spec);
    CHECK(m.m0 == doctest::Approx(kernel_A_coefficient(p)).epsilon(0.02));
    const double m2_small_cutoff = -p.hbar() * bh / (24.0 * kPi * p.c() * p.c());
    CHECK(m.m2 == doctest::Approx(m2_small_cutoff).epsilon(0.05));
    CHECK(m.m2 / m.m0 == doctest::Approx(-bh * bh / 12.0).epsilon(0.05));
    CHECK(m.rel_error < 1e-8);
  }
}

TEST_CASE("classical-limit kernel integrates to A with no delta'' weight") {
  const PhysicalParams p(1.0, 1.0, 0.1);
  const auto m = thermal_kernel_moments({p, 3.0, 64, true});
  CHECK(m.m0 == doctest::Approx(kernel_A_coefficient(p)).epsilon(1e-3));
  CHECK(m.m2 == 0.0);
}

TEST_CASE("invalid kernel specs") {
  const PhysicalParams p(1.0, 1.0, 0.1);
  CHECK_THROWS_AS(thermal_kernel_moments({p, 0.0, 64, false}), std::invalid_argument);
  CHECK_THROWS_AS(thermal_kernel_moments({p, 1.0, 32, false}), std::invalid_argument);
  CHECK_THROWS_AS(thermal_kernel_moments({PhysicalParams(1.0, 0.0, 0.1), 1.0, 64, false}), std::domain_error);
  CHECK_THROWS_AS(spectral_density({p, -1.0, 64, false}, 1.0), std::invalid_argument);
}

TEST_CASE("m0 positive and m2/m0 insensitive to the cutoff") {
  for (double T : {0.1, 1.0, 30.0}) {
    const PhysicalParams p(1.0, T, 0.1);
    const double bh = p.beta() * p.hbar();
    const auto lo = thermal_kernel_moments({p, 0.02 / bh, 64, false});
    const auto hi = thermal_kernel_moments({p, 0.05 / bh, 64, false});
    CHECK(lo.m0 > 0.0);
    CHECK(hi.m0 > 0.0);
    const double r = (lo.m2 / lo.m0) / (hi.m2 / hi.m0);
    CHECK(r < 2.0);
    CHECK(r > 0.5);
  }
}
