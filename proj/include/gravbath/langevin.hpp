#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gravbath/core.hpp"

namespace gravbath::langevin {

/// External potential V(x) with gradient and Hessian.
class Potential {
 public:
  enum class Kind { harmonic, kepler_softened, polynomial, custom };

  /// One monomial coeff * x^px y^py z^pz.
  struct Monomial {
    double coeff;
    int px;
    int py;
    int pz;
  };

  using ScalarFn = std::function<double(const Vec3&)>;
  using VectorFn = std::function<Vec3(const Vec3&)>;
  using MatrixFn = std::function<Mat3(const Vec3&)>;

  /// V = stiffness |x|^2 / 2.
  static Potential harmonic(double stiffness);
  /// V = -strength / sqrt(|x|^2 + softening^2).
  static Potential kepler_softened(double strength, double softening);
  /// V = sum of monomials; exponents must be non-negative.
  static Potential polynomial(std::vector<Monomial> terms);
  /// User-supplied callables. Without a Hessian the order-reduced damping
  /// force is unavailable.
  static Potential custom(ScalarFn value, VectorFn gradient, MatrixFn hessian = {});

  Kind kind() const { return kind_; }
  std::string name() const;
  bool has_hessian() const { return static_cast<bool>(hessian_); }

  double value(const Vec3& x) const { return value_(x); }
  Vec3 gradient(const Vec3& x) const { return gradient_(x); }
  /// Throws std::logic_error when no Hessian is available.
  Mat3 hessian(const Vec3& x) const;

 private:
  Potential(Kind kind, ScalarFn v, VectorFn g, MatrixFn h)
      : kind_(kind), value_(std::move(v)), gradient_(std::move(g)), hessian_(std::move(h)) {}
  Kind kind_;
  ScalarFn value_;
  VectorFn gradient_;
  MatrixFn hessian_;
};

struct TrajectoryState {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  /// Order-reduced acceleration -grad V / M.
  Vec3 a = Vec3::Zero();
  /// M v^2 / 2 + V(x)
  double E = 0.0;
  /// (2/3)(gamma hbar / c^4) d/dt (v^2)^2 = (8/3)(gamma hbar / c^4) v^2 (v . a)
  double E_schott = 0.0;
  /// Radiated power -2(gamma hbar / c^4)[a^2 v^2 + (a . v)^2 / 3]; negative for loss.
  double P_rad = 0.0;
};

/// Thrown when |v| crosses the nonrelativistic guard or the state turns non-finite.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DampingMode { order_reduced, third_order };

struct IntegratorOptions {
  /// Abort when |v| >= guard_fraction * c.
  double guard_fraction = 0.3;
  /// Flag the trajectory when |v| >= warn_fraction * c.
  double warn_fraction = 0.1;
  /// Keep every n-th state (the first and last are always kept).
  int sample_every = 1;
  DampingMode mode = DampingMode::order_reduced;
};

struct Trajectory {
  std::vector<TrajectoryState> states;
  bool speed_warning = false;
};

/// 2(gamma hbar/c^4) d/dt[a v^2 + v (a . v)/3] for given v, a and da/dt:
/// 2(gamma hbar/c^4)[adot v^2 + 2 a (a.v) + a (a.v)/3 + v (adot.v)/3 + v a^2/3].
Vec3 radiation_damping_force(const Vec3& v, const Vec3& a, const Vec3& adot, const PhysicalParams& params);

/// Order-reduced damping force at (x, v): a = -grad V / M and adot = -(Hess V . v) / M.
/// Throws std::logic_error if the potential has no Hessian.
Vec3 radiation_damping_force(const Vec3& x, const Vec3& v, const Potential& potential,
                             const PhysicalParams& params);

/// Fills a, E, E_schott and P_rad from (t, x, v).
TrajectoryState make_state(double t, const Vec3& x, const Vec3& v, const Potential& potential,
                           const PhysicalParams& params);

/// Deterministic radiation-damped motion with n = ceil(t_final/dt) equal
/// steps. Each step is a Strang splitting:
/// half a step of the damping flow dv/dt = F(x, v)/M at fixed x (one RK4
/// step), a velocity-Verlet step in the potential, and another damping half
/// step. With gamma = 0 this is plain velocity Verlet. The third-order mode
/// integrates (x, v, a) directly with RK4 and is subject to runaway growth.
///
/// Throws std::invalid_argument for dt <= 0 or t_final < 0 and GuardError on
/// a speed-guard violation.
Trajectory integrate_classical(const Vec3& x0, const Vec3& v0, const Potential& potential,
                               const PhysicalParams& params, double dt, double t_final,
                               const IntegratorOptions& options = {});

struct EnergyBalance {
  std::vector<double> times;
  /// d/dt (E - E_schott) by central differences.
  std::vector<double> lhs;
  /// -2(gamma hbar/c^4)[a^2 v^2 + (a . v)^2 / 3]
  std::vector<double> rhs;
  std::vector<double> residual;
};

/// Energy-balance residual at interior samples. Throws std::invalid_argument
/// for fewer than three states or non-uniform sampling.
EnergyBalance energy_balance_residual(const std::vector<TrajectoryState>& traj, const PhysicalParams& params);

struct NoiseConfig {
  std::uint64_t seed = 0;
  /// Independent stream index, e.g. the trajectory number in an ensemble.
  std::uint64_t stream = 0;
  double dt = 0.0;
  bool quantum_correction = false;
  /// M hbar^2 = (4/3) w hbar^2 / c^4
  double variance_scale = 0.0;
  /// hbar^2 beta^2 / 24; zero when w = 0.
  double filter_coefficient = 0.0;

  static NoiseConfig from_params(const PhysicalParams& params, double dt, std::uint64_t seed,
                                 bool quantum_correction = false, std::uint64_t stream = 0);
};

/// n white-noise vectors with per-component variance variance_scale / dt.
/// Throws std::invalid_argument for dt <= 0.
std::vector<Vec3> draw_white_noise(std::size_t n, const NoiseConfig& config);

/// y_n = eta_n - c (eta_{n+1} - 2 eta_n + eta_{n-1}) / dt^2 for n = 1..size-2.
/// The output has two entries fewer than the input.
std::vector<Vec3> apply_quantum_filter(const std::vector<Vec3>& eta, double coefficient, double dt);

/// n_steps noise vectors: white noise, filtered when quantum_correction is on
/// (the filter consumes two extra raw samples).
std::vector<Vec3> sample_noise(std::size_t n_steps, const NoiseConfig& config);

/// Langevin dynamics for P = M v - 2(gamma hbar/c^4)[a v^2 + v (a . v)/3] with
/// dP = -grad V dt + d(Omega^{1/2} eta). Each step applies the classical step,
/// then adds Omega^{1/2}(v_n) eta_n - Omega^{1/2}(v_{n-1}) eta_{n-1} to P and
/// recovers v by fixed-point iteration. For w = 0 the noise stage is skipped
/// and the result equals integrate_classical bit for bit. The step is
/// noise.dt; t_final must be an integer multiple of it.
Trajectory integrate_langevin(const Vec3& x0, const Vec3& v0, const Potential& potential,
                              const PhysicalParams& params, const NoiseConfig& noise, double t_final,
                              const IntegratorOptions& options = {});

/// Independent trajectories; trajectory j uses noise stream j. Results are
/// placed by index, so they do not depend on the thread count.
std::vector<Trajectory> run_ensemble(const Vec3& x0, const Vec3& v0, const Potential& potential,
                                     const PhysicalParams& params, const NoiseConfig& noise, double t_final,
                                     std::size_t n_trajectories, unsigned threads = 1,
                                     const IntegratorOptions& options = {});

}  // namespace gravbath::langevin
