#include "gravbath/langevin.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include <Eigen/LU>

namespace gravbath::langevin {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

// d^m/dx^m x^n
double dpow(double x, int n, int m) {
  if (m > n) return 0.0;
  double coeff = 1.0;
  for (int k = 0; k < m; ++k) coeff *= n - k;
  return coeff * ipow(x, n - m);
}

long long step_count(double t_final, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be non-negative");
  if (t_final == 0.0) return 0;
  return static_cast<long long>(std::ceil(t_final / dt * (1.0 - 1e-12)));
}

// a v^2 + v (a . v) / 3
Vec3 bracket(const Vec3& v, const Vec3& a) { return a * v.squaredNorm() + v * (a.dot(v) / 3.0); }

class Stepper {
 public:
  Stepper(const Potential& potential, const PhysicalParams& params, const IntegratorOptions& options)
      : potential_(potential), params_(params), options_(options), k_(params.damping_scale()) {
    if (options.sample_every < 1) throw std::invalid_argument("sample_every must be >= 1");
    if (options.mode == DampingMode::third_order && k_ == 0.0) {
      throw std::invalid_argument("third-order mode needs gamma > 0");
    }
    if (k_ != 0.0 && options.mode == DampingMode::order_reduced && !potential.has_hessian()) {
      throw std::logic_error("order-reduced damping needs the potential Hessian");
    }
  }

  // One classical step of length h; a is only used in third-order mode.
  void step(Vec3& x, Vec3& v, Vec3& a, double h) const {
    if (options_.mode == DampingMode::third_order) {
      third_order_step(x, v, a, h);
      return;
    }
    if (k_ != 0.0) damping_flow(x, v, 0.5 * h);
    const double M = params_.mass();
    v -= (0.5 * h / M) * potential_.gradient(x);
    x += h * v;
    v -= (0.5 * h / M) * potential_.gradient(x);
    if (k_ != 0.0) damping_flow(x, v, 0.5 * h);
    a = -potential_.gradient(x) / M;
  }

  void check(const Vec3& x, const Vec3& v, double t, bool& warning) const {
    if (!x.allFinite() || !v.allFinite()) throw GuardError("non-finite state at t = " + std::to_string(t));
    const double speed = v.norm() / params_.c();
    if (speed >= options_.guard_fraction) {
      throw GuardError("speed guard: |v|/c = " + std::to_string(speed) + " >= " +
                       std::to_string(options_.guard_fraction) + " at t = " + std::to_string(t));
    }
    if (speed >= options_.warn_fraction) warning = true;
  }

 private:
  void damping_flow(const Vec3& x, Vec3& v, double h) const {
    const double M = params_.mass();
    auto f = [&](const Vec3& u) { return Vec3(radiation_damping_force(x, u, potential_, params_) / M); };
    const Vec3 k1 = f(v);
    const Vec3 k2 = f(v + 0.5 * h * k1);
    const Vec3 k3 = f(v + 0.5 * h * k2);
    const Vec3 k4 = f(v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // M a + grad V = 2k d/dt[a v^2 + v (a.v)/3], solved for adot.
  Vec3 jerk(const Vec3& x, const Vec3& v, const Vec3& a) const {
    const double M = params_.mass();
    const Mat3 G = v.squaredNorm() * Mat3::Identity() + v * v.transpose() / 3.0;
    const Vec3 rest = a * (7.0 / 3.0 * a.dot(v)) + v * (a.squaredNorm() / 3.0);
    const Vec3 rhs = (M * a + potential_.gradient(x)) / (2.0 * k_) - rest;
    return G.partialPivLu().solve(rhs);
  }

  void third_order_step(Vec3& x, Vec3& v, Vec3& a, double h) const {
    struct S {
      Vec3 x, v, a;
    };
    auto f = [&](const S& s) { return S{s.v, s.a, jerk(s.x, s.v, s.a)}; };
    auto add = [](const S& s, const S& d, double c) { return S{s.x + c * d.x, s.v + c * d.v, s.a + c * d.a}; };
    const S s0{x, v, a};
    const S k1 = f(s0);
    const S k2 = f(add(s0, k1, 0.5 * h));
    const S k3 = f(add(s0, k2, 0.5 * h));
    const S k4 = f(add(s0, k3, h));
    x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    v += (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    a += (h / 6.0) * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
  }

  const Potential& potential_;
  const PhysicalParams& params_;
  const IntegratorOptions& options_;
  double k_;
};

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Shared driver. The noise stage runs only when `noise` is non-empty.
Trajectory run(const Vec3& x0, const Vec3& v0, const Potential& potential, const PhysicalParams& params,
               double dt, double t_final, const IntegratorOptions& options, const NoiseConfig* noise) {
  const long long n = step_count(t_final, dt);
  const double h = n == 0 ? 0.0 : t_final / static_cast<double>(n);
  const Stepper stepper(potential, params, options);
  const double M = params.mass();
  const double k = params.damping_scale();

  std::vector<Vec3> eta;
  if (noise != nullptr) {
    eta = sample_noise(static_cast<std::size_t>(n), *noise);
  }

  Trajectory traj;
  Vec3 x = x0;
  Vec3 v = v0;
  Vec3 a = -potential.gradient(x) / M;
  stepper.check(x, v, 0.0, traj.speed_warning);
  traj.states.push_back(make_state(0.0, x, v, potential, params));

  Vec3 previous_kick = Vec3::Zero();
  for (long long step = 0; step < n; ++step) {
    const Vec3 v_start = v;
    stepper.step(x, v, a, h);
    if (noise != nullptr) {
      const Vec3 kick = omega_sqrt(v_start) * eta[static_cast<std::size_t>(step)];
      const Vec3 ar = -potential.gradient(x) / M;
      const Vec3 P = M * v - 2.0 * k * bracket(v, ar) + (kick - previous_kick);
      previous_kick = kick;
      Vec3 u = v;
      bool converged = k == 0.0;
      if (converged) {
        u = P / M;
      } else {
        for (int it = 0; it < 200; ++it) {
          const Vec3 next = (P + 2.0 * k * bracket(u, ar)) / M;
          const double change = (next - u).norm();
          u = next;
          if (change <= 1e-14 * u.norm() || change == 0.0) {
            converged = true;
            break;
          }
        }
      }
      if (!converged) {
        throw GuardError("integrate_langevin: velocity recovery did not converge at step " + std::to_string(step));
      }
      v = u;
    }
    const double t = h * static_cast<double>(step + 1);
    stepper.check(x, v, t, traj.speed_warning);
    if ((step + 1) % options.sample_every == 0 || step + 1 == n) {
      TrajectoryState s = make_state(t, x, v, potential, params);
      if (options.mode == DampingMode::third_order) s.a = a;
      traj.states.push_back(s);
    }
  }
  return traj;
}

}  // namespace

Potential Potential::harmonic(double stiffness) {
  if (!(stiffness > 0.0)) throw std::invalid_argument("harmonic potential: stiffness must be positive");
  return Potential(
      Kind::harmonic, [stiffness](const Vec3& x) { return 0.5 * stiffness * x.squaredNorm(); },
      [stiffness](const Vec3& x) { return Vec3(stiffness * x); },
      [stiffness](const Vec3&) { return Mat3(stiffness * Mat3::Identity()); });
}

Potential Potential::kepler_softened(double strength, double softening) {
  if (!(strength > 0.0) || !(softening > 0.0)) {
    throw std::invalid_argument("kepler potential: strength and softening must be positive");
  }
  const double s2 = softening * softening;
  return Potential(
      Kind::kepler_softened, [=](const Vec3& x) { return -strength / std::sqrt(x.squaredNorm() + s2); },
      [=](const Vec3& x) {
        const double r = std::sqrt(x.squaredNorm() + s2);
        return Vec3(strength * x / (r * r * r));
      },
      [=](const Vec3& x) {
        const double r2 = x.squaredNorm() + s2;
        const double r = std::sqrt(r2);
        return Mat3(strength / (r * r2) * (Mat3::Identity() - 3.0 * x * x.transpose() / r2));
      });
}

Potential Potential::polynomial(std::vector<Monomial> terms) {
  for (const auto& m : terms) {
    if (m.px < 0 || m.py < 0 || m.pz < 0) throw std::invalid_argument("polynomial potential: negative exponent");
  }
  auto eval = [](const std::vector<Monomial>& ts, const Vec3& x, int dx, int dy, int dz) {
    double acc = 0.0;
    for (const auto& m : ts) acc += m.coeff * dpow(x[0], m.px, dx) * dpow(x[1], m.py, dy) * dpow(x[2], m.pz, dz);
    return acc;
  };
  return Potential(
      Kind::polynomial, [=](const Vec3& x) { return eval(terms, x, 0, 0, 0); },
      [=](const Vec3& x) {
        return Vec3(eval(terms, x, 1, 0, 0), eval(terms, x, 0, 1, 0), eval(terms, x, 0, 0, 1));
      },
      [=](const Vec3& x) {
        Mat3 h;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            int d[3] = {0, 0, 0};
            ++d[i];
            ++d[j];
            h(i, j) = eval(terms, x, d[0], d[1], d[2]);
          }
        return h;
      });
}

Potential Potential::custom(ScalarFn value, VectorFn gradient, MatrixFn hessian) {
  if (!value || !gradient) throw std::invalid_argument("custom potential: value and gradient are required");
  return Potential(Kind::custom, std::move(value), std::move(gradient), std::move(hessian));
}

std::string Potential::name() const {
  switch (kind_) {
    case Kind::harmonic:
      return "harmonic";
    case Kind::kepler_softened:
      return "kepler-softened";
    case Kind::polynomial:
      return "polynomial";
    case Kind::custom:
      return "custom";
  }
  return "unknown";
}

Mat3 Potential::hessian(const Vec3& x) const {
  if (!hessian_) throw std::logic_error("potential '" + name() + "' has no Hessian");
  return hessian_(x);
}

Vec3 radiation_damping_force(const Vec3& v, const Vec3& a, const Vec3& adot, const PhysicalParams& params) {
  const double av = a.dot(v);
  const Vec3 d = adot * v.squaredNorm() + a * (2.0 * av) + a * (av / 3.0) + v * ((adot.dot(v) + a.squaredNorm()) / 3.0);
  return 2.0 * params.damping_scale() * d;
}

Vec3 radiation_damping_force(const Vec3& x, const Vec3& v, const Potential& potential,
                             const PhysicalParams& params) {
  const double M = params.mass();
  const Vec3 a = -potential.gradient(x) / M;
  const Vec3 adot = -(potential.hessian(x) * v) / M;
  return radiation_damping_force(v, a, adot, params);
}

TrajectoryState make_state(double t, const Vec3& x, const Vec3& v, const Potential& potential,
                           const PhysicalParams& params) {
  const double M = params.mass();
  const double k = params.damping_scale();
  TrajectoryState s;
  s.t = t;
  s.x = x;
  s.v = v;
  s.a = -potential.gradient(x) / M;
  const double v2 = v.squaredNorm();
  const double av = s.a.dot(v);
  s.E = 0.5 * M * v2 + potential.value(x);
  s.E_schott = 8.0 / 3.0 * k * v2 * av;
  s.P_rad = -2.0 * k * (s.a.squaredNorm() * v2 + av * av / 3.0);
  return s;
}

Trajectory integrate_classical(const Vec3& x0, const Vec3& v0, const Potential& potential,
                               const PhysicalParams& params, double dt, double t_final,
                               const IntegratorOptions& options) {
  return run(x0, v0, potential, params, dt, t_final, options, nullptr);
}

EnergyBalance energy_balance_residual(const std::vector<TrajectoryState>& traj, const PhysicalParams& params) {
  if (traj.size() < 3) throw std::invalid_argument("energy_balance_residual: need at least three samples");
  const double h = traj[1].t - traj[0].t;
  if (!(h > 0.0)) throw std::invalid_argument("energy_balance_residual: times must increase");
  for (std::size_t n = 1; n < traj.size(); ++n) {
    if (std::abs(traj[n].t - traj[n - 1].t - h) > 1e-9 * h) {
      throw std::invalid_argument("energy_balance_residual: sampling is not uniform");
    }
  }
  const double k = params.damping_scale();
  EnergyBalance out;
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    const double up = traj[n + 1].E - traj[n + 1].E_schott;
    const double down = traj[n - 1].E - traj[n - 1].E_schott;
    const double lhs = (up - down) / (2.0 * h);
    const Vec3& a = traj[n].a;
    const Vec3& v = traj[n].v;
    const double av = a.dot(v);
    const double rhs = -2.0 * k * (a.squaredNorm() * v.squaredNorm() + av * av / 3.0);
    out.times.push_back(traj[n].t);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.residual.push_back(lhs - rhs);
  }
  return out;
}

NoiseConfig NoiseConfig::from_params(const PhysicalParams& params, double dt, std::uint64_t seed,
                                     bool quantum_correction, std::uint64_t stream) {
  if (!(dt > 0.0)) throw std::invalid_argument("NoiseConfig: dt must be positive");
  NoiseConfig cfg;
  cfg.seed = seed;
  cfg.stream = stream;
  cfg.dt = dt;
  cfg.quantum_correction = quantum_correction;
  const double c2 = params.c() * params.c();
  cfg.variance_scale = 4.0 / 3.0 * params.w() * params.hbar() * params.hbar() / (c2 * c2);
  if (params.w() > 0.0) {
    const double bh = params.beta() * params.hbar();
    cfg.filter_coefficient = bh * bh / 24.0;
  }
  return cfg;
}

std::vector<Vec3> draw_white_noise(std::size_t n, const NoiseConfig& config) {
  if (!(config.dt > 0.0)) throw std::invalid_argument("draw_white_noise: dt must be positive");
  if (!(config.variance_scale >= 0.0)) throw std::invalid_argument("draw_white_noise: negative variance");
  auto engine = make_engine(config.seed, config.stream);
  std::normal_distribution<double> normal(0.0, std::sqrt(config.variance_scale / config.dt));
  std::vector<Vec3> out(n);
  for (auto& e : out) {
    e[0] = normal(engine);
    e[1] = normal(engine);
    e[2] = normal(engine);
  }
  return out;
}

std::vector<Vec3> apply_quantum_filter(const std::vector<Vec3>& eta, double coefficient, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("apply_quantum_filter: dt must be positive");
  if (eta.size() < 2) return {};
  const double c = coefficient / (dt * dt);
  std::vector<Vec3> out;
  out.reserve(eta.size() - 2);
  for (std::size_t n = 1; n + 1 < eta.size(); ++n) out.push_back(eta[n] - c * (eta[n + 1] - 2.0 * eta[n] + eta[n - 1]));
  return out;
}

std::vector<Vec3> sample_noise(std::size_t n_steps, const NoiseConfig& config) {
  if (!config.quantum_correction) return draw_white_noise(n_steps, config);
  return apply_quantum_filter(draw_white_noise(n_steps + 2, config), config.filter_coefficient, config.dt);
}

Trajectory integrate_langevin(const Vec3& x0, const Vec3& v0, const Potential& potential,
                              const PhysicalParams& params, const NoiseConfig& noise, double t_final,
                              const IntegratorOptions& options) {
  if (!(noise.dt > 0.0)) throw std::invalid_argument("integrate_langevin: dt must be positive");
  const long long n = step_count(t_final, noise.dt);
  if (n > 0 && std::abs(t_final / static_cast<double>(n) - noise.dt) > 1e-9 * noise.dt) {
    throw std::invalid_argument("integrate_langevin: t_final must be an integer multiple of dt");
  }
  const bool noisy = params.w() > 0.0;
  return run(x0, v0, potential, params, noise.dt, t_final, options, noisy ? &noise : nullptr);
}

std::vector<Trajectory> run_ensemble(const Vec3& x0, const Vec3& v0, const Potential& potential,
                                     const PhysicalParams& params, const NoiseConfig& noise, double t_final,
                                     std::size_t n_trajectories, unsigned threads,
                                     const IntegratorOptions& options) {
  std::vector<Trajectory> out(n_trajectories);
  std::vector<std::exception_ptr> errors(n_trajectories);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t j = next++; j < n_trajectories; j = next++) {
      try {
        NoiseConfig cfg = noise;
        cfg.stream = j;
        out[j] = integrate_langevin(x0, v0, potential, params, cfg, t_final, options);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_trajectories)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace gravbath::langevin
