#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "gravbath/bath.hpp"
#include "gravbath/cli.hpp"
#include "gravbath/core.hpp"
#include "gravbath/hilbert.hpp"
#include "gravbath/langevin.hpp"
#include "gravbath/master.hpp"

namespace gravbath::cli {

namespace {

struct Suite {
  std::vector<CheckRecord> records;
  void bound(const std::string& name, double value, double tol) {
    records.push_back({name, std::isfinite(value) && std::abs(value) <= tol, value, tol, ""});
  }
};

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

void core_checks(Suite& s) {
  std::mt19937_64 rng(20240611);
  double idem = 0.0, sym = 0.0, trace = 0.0, complete = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 k = random_unit(rng);
    const PolProjector L = pol_projector(k);
    idem = std::max(idem, L.compose(L).max_abs_diff(L));
    const auto eps = polarization_tensors(k);
    PolProjector sum;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            sym = std::max({sym, std::abs(L(i, j, a, b) - L(j, i, a, b)), std::abs(L(i, j, a, b) - L(a, b, i, j))});
            sum(i, j, a, b) = (eps.plus(i, j) * std::conj(eps.plus(a, b)) + eps.minus(i, j) * std::conj(eps.minus(a, b))).real();
          }
    complete = std::max(complete, sum.max_abs_diff(L));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trace = std::max(trace, std::abs(L(0, 0, a, b) + L(1, 1, a, b) + L(2, 2, a, b)));
  }
  s.bound("projector_idempotent", idem, 1e-13);
  s.bound("projector_symmetric", sym, 1e-13);
  s.bound("projector_trace_free", trace, 1e-13);
  s.bound("polarization_completeness", complete, 1e-13);
  s.bound("angular_average", angular_average_pol_projector(SphereQuadrature(6)).max_abs_diff(analytic_angular_average()),
          1e-12);

  double root = 0.0, ident = 0.0;
  std::normal_distribution<double> nd;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 v(nd(rng), nd(rng), nd(rng));
    const Vec3 a(nd(rng), nd(rng), nd(rng));
    const Mat3 r = omega_sqrt(v);
    root = std::max(root, (r * r - omega_matrix(v)).cwiseAbs().maxCoeff() / v.squaredNorm());
    const double lhs = q_tensor_rate(v, a, 1.0).squared_norm();
    const double rhs = 2.0 * (a.squaredNorm() * v.squaredNorm() + a.dot(v) * a.dot(v) / 3.0);
    ident = std::max(ident, std::abs(lhs - rhs) / rhs);
  }
  s.bound("omega_sqrt_squares_to_omega", root, 1e-12);
  s.bound("radiated_power_tensor_identity", ident, 1e-12);
}

void quantum_checks(Suite& s) {
  using namespace hilbert;
  const auto P = PhysicalParams::with_gamma(10.0, 2.0, 0.5);
  const double omega = 1.0;
  const auto basis = build_basis(4);
  const auto H = hamiltonian_ho(basis, P, omega);
  const auto q = q_operator(basis, P, omega);
  const auto qd = heisenberg_derivative(H, q, P.hbar());

  double herm = 0.0, selection = 0.0, spectral = 0.0;
  const CMatrix tr = q(0, 0).matrix() + q(1, 1).matrix() + q(2, 2).matrix();
  for (const auto& c : q.components()) herm = std::max(herm, c.hermiticity_defect());
  for (std::size_t f = 0; f < basis->dim(); ++f)
    for (std::size_t i = 0; i < basis->dim(); ++i) {
      const int dN = FockBasis::total(basis->state(f)) - FockBasis::total(basis->state(i));
      const double omega_if = omega * -dN;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const auto qfi = q(k, l).matrix()(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i));
          if (dN != 0 && std::abs(dN) != 2) selection = std::max(selection, std::abs(qfi));
          const auto dfi = qd(k, l).matrix()(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i));
          spectral = std::max(spectral, std::abs(dfi + std::complex<double>(0.0, omega_if) * qfi));
        }
    }
  s.bound("q_traceless", tr.cwiseAbs().maxCoeff(), 0.0);
  s.bound("q_hermitian", herm, 1e-13);
  s.bound("q_selection_rules", selection, 0.0);
  s.bound("qdot_spectral_identity", spectral, 1e-12);

  const auto b3 = build_basis(3);
  const auto H3 = hamiltonian_ho(b3, P, omega);
  const auto q3 = q_operator(b3, P, omega);
  const auto qd3 = heisenberg_derivative(H3, q3, P.hbar());
  const auto Lm = master::liouvillian_master(H3, q3, qd3, P);
  const auto Ll = master::lindblad_generator(H3, master::LindbladOps::build(q3, qd3, P), P);
  const auto shift = master::anticommutator_shift(q3, qd3, P);
  s.bound("generator_relation", (Lm - Ll - shift).max_abs() / Lm.max_abs(), 1e-10);
  s.bound("master_trace_preservation", Lm.trace_defect() / Lm.max_abs(), 1e-10);
  s.bound("lindblad_trace_preservation", Ll.trace_defect() / Ll.max_abs(), 1e-10);

  const Occupation i{2, 0, 0};
  const double gamma_sum = master::spontaneous_rate(i, q, P, omega);
  const double golden = master::golden_rule_rate(i, basis, P, omega, SphereQuadrature(8));
  const double expected = 4.0 / 3.0 * P.gamma() * P.hbar() * P.hbar() * std::pow(omega, 3) /
                          (P.mass() * P.mass() * std::pow(P.c(), 4));
  s.bound("spontaneous_rate_closed_form", gamma_sum / expected - 1.0, 1e-12);
  s.bound("golden_rule_matches_sum_formula", golden / gamma_sum - 1.0, 1e-9);
  const double zeros = std::abs(master::spontaneous_rate({0, 0, 0}, q, P, omega)) +
                       std::abs(master::spontaneous_rate({1, 0, 0}, q, P, omega)) +
                       std::abs(master::spontaneous_rate({0, 1, 0}, q, P, omega)) +
                       std::abs(master::spontaneous_rate({0, 0, 1}, q, P, omega));
  s.bound("selection_rule_zero_rates", zeros, 0.0);

  const auto Lw = master::liouvillian_master(H, q, qd, P, {true, false, true});
  const double induced = master::induced_rate(i, q, qd, P);
  s.bound("induced_rate_matches_generator", (master::diagonal_rate(i, Lw) + induced) / induced, 1e-10);
  const auto Lg = master::liouvillian_master(H, q, qd, P, {true, true, false});
  const double total = master::emission_balance(i, q, P, omega).total;
  s.bound("gamma_rate_matches_generator", (master::diagonal_rate(i, Lg) - total) / std::abs(total), 1e-10);
}

void bath_checks(Suite& s) {
  const PhysicalParams P(1.0, 1.0, 1.0);
  const bath::KernelSpec spec{P, 0.05 / (P.beta() * P.hbar()), 64, false};
  const auto m = bath::thermal_kernel_moments(spec);
  const double bh = P.beta() * P.hbar();
  s.bound("kernel_m0_high_temperature_limit", m.m0 / bath::kernel_A_coefficient(P) - 1.0, 0.02);
  s.bound("kernel_m2_coth_correction", (m.m2 / m.m0 + bh * bh / 12.0) / (bh * bh / 12.0), 0.05);
}

void langevin_checks(Suite& s) {
  using namespace langevin;
  const auto pot = Potential::harmonic(1.0);
  const Vec3 x0(0.1, 0.0, 0.0), v0(0.0, 0.05, 0.02);

  const auto cold = PhysicalParams::with_gamma(1.0, 0.0, 0.01);
  const auto ref = integrate_classical(x0, v0, pot, cold, 0.01, 5.0);
  const auto lan = integrate_langevin(x0, v0, pot, cold, NoiseConfig::from_params(cold, 0.01, 7), 5.0);
  bool same = ref.states.size() == lan.states.size();
  for (std::size_t n = 0; same && n < ref.states.size(); ++n)
    same = ref.states[n].x == lan.states[n].x && ref.states[n].v == lan.states[n].v;
  s.records.push_back({"langevin_w0_matches_classical", same, same ? 0.0 : 1.0, 0.0, "bitwise"});

  double worst = 0.0;
  double prev = 0.0, ratio = 0.0;
  for (double dt : {0.01, 0.005}) {
    const auto tr = integrate_classical(x0, v0, pot, cold, dt, 10.0);
    const auto eb = energy_balance_residual(tr.states, cold);
    double m = 0.0;
    for (double r : eb.residual) m = std::max(m, std::abs(r));
    if (prev > 0.0) ratio = prev / m;
    prev = m;
  }
  s.bound("energy_balance_second_order", ratio - 4.0, 0.3);

  Units u1{1.0, 1.0, 1.0}, u10{10.0, 1.0, 1.0};
  const auto p1 = PhysicalParams::with_gamma(1.0, 1e-3, 0.01, u1);
  const auto p10 = PhysicalParams::with_gamma(1.0, 1e-3, 0.001, u10);
  const auto a = integrate_langevin(x0, v0, pot, p1, NoiseConfig::from_params(p1, 0.01, 3), 5.0);
  const auto b = integrate_langevin(x0, v0, pot, p10, NoiseConfig::from_params(p10, 0.01, 3), 5.0);
  for (std::size_t n = 0; n < a.states.size(); ++n) {
    worst = std::max(worst, (a.states[n].x - b.states[n].x).norm() / a.states[n].x.norm());
    worst = std::max(worst, (a.states[n].v - b.states[n].v).norm() / a.states[n].v.norm());
  }
  s.bound("hbar_independence", worst, 1e-12);

  const auto hot = PhysicalParams::with_gamma(1.0, 2.0, 0.5);
  const auto cfg = NoiseConfig::from_params(hot, 0.01, 11);
  const auto eta = draw_white_noise(20000, cfg);
  const double target = cfg.variance_scale / cfg.dt;
  double var = 0.0, cov = 0.0;
  for (const auto& e : eta) {
    var += e[0] * e[0];
    cov += e[0] * e[1];
  }
  const double n = static_cast<double>(eta.size());
  var /= n;
  cov /= n;
  s.bound("noise_variance_3se", (var - target) / (target * std::sqrt(2.0 / n)), 3.0);
  s.bound("noise_cross_covariance_3se", cov / (target / std::sqrt(n)), 3.0);
}

}  // namespace

std::vector<CheckRecord> run_invariant_suite() {
  Suite s;
  core_checks(s);
  quantum_checks(s);
  bath_checks(s);
  langevin_checks(s);
  return s.records;
}

}  // namespace gravbath::cli
