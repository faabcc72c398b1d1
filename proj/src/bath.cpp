#include "gravbath/bath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/legendre.hpp>

namespace gravbath::bath {

namespace {

constexpr double kPi = std::numbers::pi;

// Abel regulator for the tau integrals, relative to the smallest physical
// frequency scale. The induced bias in m0 is ~ (2 eps / pi Lambda) ln(Lambda / eps).
constexpr double kAbelFraction = 1e-5;
constexpr double kConvergenceTolerance = 1e-8;

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  for (double x : boost::math::legendre_p_zeros<double>(n)) {
    const double dp = boost::math::legendre_p_prime(n, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes.push_back(x);
    rule.weights.push_back(w);
    if (x != 0.0) {
      rule.nodes.push_back(-x);
      rule.weights.push_back(w);
    }
  }
  return rule;
}

// Composite Gauss-Legendre over [a, b] with panels of width <= h.
template <class F>
double composite(const GaussRule& rule, F&& f, double a, double b, double h) {
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    double acc = 0.0;
    for (std::size_t n = 0; n < rule.nodes.size(); ++n) acc += rule.weights[n] * f(mid + 0.5 * width * rule.nodes[n]);
    total += 0.5 * width * acc;
  }
  return total;
}

double normalization(const PhysicalParams& p) {
  return p.hbar() / (4.0 * kPi * kPi * p.c() * p.c());
}

void validate(const KernelSpec& spec) {
  if (!(spec.uv_cutoff > 0.0)) throw std::invalid_argument("KernelSpec: uv_cutoff must be positive");
  if (spec.quad_points < 64) throw std::invalid_argument("KernelSpec: quad_points must be >= 64");
}

// x/2 coth(x/2) - 1, accurate for small x.
double thermal_excess(double x) {
  if (x < 0.1) {
    const double x2 = x * x;
    return x2 / 12.0 - x2 * x2 / 720.0 + x2 * x2 * x2 / 30240.0;
  }
  return 0.5 * x / std::tanh(0.5 * x) - 1.0;
}

// Quantum part of the spectral density: S(omega) minus its classical limit.
double quantum_excess_density(const KernelSpec& spec, double omega) {
  const PhysicalParams& p = spec.params;
  const double bh = p.beta() * p.hbar();
  return normalization(p) * (2.0 / bh) * thermal_excess(bh * omega) * std::exp(-omega / spec.uv_cutoff);
}

// Integral over omega in [0, inf) in the variable u = ln(omega), which
// resolves both the regulator scale and the cutoff scale.
template <class F>
double log_integral(const GaussRule& rule, F&& f, double omega_lo, double omega_hi, double h) {
  auto g = [&](double u) {
    const double omega = std::exp(u);
    return f(omega) * omega;
  };
  return composite(rule, g, std::log(omega_lo), std::log(omega_hi), h);
}

}  // namespace

double kernel_A_coefficient(const PhysicalParams& params) {
  if (params.temperature() == 0.0) {
    throw std::domain_error("kernel_A_coefficient: high-temperature limit undefined at T = 0");
  }
  return params.hbar() / (2.0 * kPi * params.c() * params.c() * params.beta() * params.hbar());
}

double kernel_C_coefficient(const PhysicalParams& params) {
  return params.hbar() / (2.0 * kPi * params.c() * params.c());
}

double spectral_density(const KernelSpec& spec, double omega) {
  validate(spec);
  const PhysicalParams& p = spec.params;
  const double cutoff = std::exp(-omega / spec.uv_cutoff);
  if (spec.classical_limit) {
    return normalization(p) * 2.0 / (p.beta() * p.hbar()) * cutoff;
  }
  if (p.temperature() == 0.0) return normalization(p) * omega * cutoff;
  const double bh = p.beta() * p.hbar();
  return normalization(p) * (2.0 / bh) * (1.0 + thermal_excess(bh * omega)) * cutoff;
}

double kernel_time_domain(const KernelSpec& spec, double tau) {
  validate(spec);
  const GaussRule rule = gauss_legendre(16);
  double scale = spec.uv_cutoff;
  if (spec.params.temperature() > 0.0) scale = std::min(scale, 1.0 / (spec.params.beta() * spec.params.hbar()));
  double h = 0.5 * scale;
  if (tau != 0.0) h = std::min(h, kPi / (2.0 * std::abs(tau)));
  auto f = [&](double omega) { return spectral_density(spec, omega) * std::cos(omega * tau); };
  return composite(rule, f, 0.0, 80.0 * spec.uv_cutoff, h);
}

KernelMoments thermal_kernel_moments(const KernelSpec& spec) {
  validate(spec);
  const PhysicalParams& p = spec.params;
  if (p.temperature() == 0.0) throw std::domain_error("thermal_kernel_moments: requires T > 0");
  const double bh = p.beta() * p.hbar();

  const double scale = std::min(spec.uv_cutoff, 1.0 / bh);
  const double eps = kAbelFraction * scale;
  const double omega_lo = eps * 1e-12;
  const double omega_hi = 80.0 * std::max(spec.uv_cutoff, 1.0 / bh);

  // int a(tau) exp(-eps |tau|) dtau      = int_0^inf S(omega) 2 eps / (eps^2 + omega^2)
  // int tau^2 a(tau) exp(-eps |tau|) dtau = int_0^inf S(omega) 4 eps (eps^2 - 3 omega^2) / (eps^2 + omega^2)^3
  auto zeroth = [&](double omega) {
    return spectral_density(spec, omega) * 2.0 * eps / (eps * eps + omega * omega);
  };
  auto second = [&](double omega) {
    if (spec.classical_limit) return 0.0;
    const double d = eps * eps + omega * omega;
    return quantum_excess_density(spec, omega) * 4.0 * eps * (eps * eps - 3.0 * omega * omega) / (d * d * d);
  };

  auto evaluate = [&](const GaussRule& rule, double h) {
    const double m0 = log_integral(rule, zeroth, omega_lo, omega_hi, h);
    const double m2 = 0.5 * log_integral(rule, second, omega_lo, omega_hi, h);
    return std::pair{m0, m2};
  };

  const GaussRule fine = gauss_legendre(spec.quad_points);
  const GaussRule coarse = gauss_legendre(spec.quad_points / 2);
  const auto [m0, m2] = evaluate(fine, 0.5);
  const auto [m0c, m2c] = evaluate(coarse, 1.0);

  if (!std::isfinite(m0) || !std::isfinite(m2)) throw QuadratureError("thermal_kernel_moments: non-finite result");
  const double err0 = std::abs(m0 - m0c) / std::abs(m0);
  const double err2 = m2 == 0.0 ? std::abs(m2c) : std::abs(m2 - m2c) / std::abs(m2);
  const double err = std::max(err0, err2);
  if (err > kConvergenceTolerance) {
    throw QuadratureError("thermal_kernel_moments: quadrature not converged (relative change " +
                          std::to_string(err) + ")");
  }
  return {m0, m2, err};
}

}  // namespace gravbath::bath
