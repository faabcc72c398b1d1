#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gravbath/bath.hpp"
#include "gravbath/cli.hpp"
#include "gravbath/core.hpp"
#include "gravbath/hilbert.hpp"
#include "gravbath/langevin.hpp"
#include "gravbath/master.hpp"

namespace gravbath::cli {

namespace {

namespace fs = std::filesystem;

class Checks {
 public:
  void add(const std::string& name, bool passed, double value, double tolerance, const std::string& detail = "") {
    records_.push_back({name, passed, value, tolerance, detail});
  }
  // |value| <= tolerance
  void bound(const std::string& name, double value, double tolerance, const std::string& detail = "") {
    add(name, std::isfinite(value) && std::abs(value) <= tolerance, value, tolerance, detail);
  }
  std::vector<CheckRecord>& records() { return records_; }

 private:
  std::vector<CheckRecord> records_;
};

struct Context {
  const ScenarioConfig& cfg;
  PhysicalParams params;
  fs::path data_dir;
  Format format;
  std::uint64_t seed;
  int threads;
  Checks checks;

  fs::path table_path(const std::string& stem) const {
    return data_dir / (stem + (format == Format::csv ? ".csv" : ".jsonl"));
  }
};

PhysicalParams make_params(const ScenarioConfig& c) {
  const Units units{c.hbar, c.c, c.kB};
  if (c.gamma) return PhysicalParams::with_gamma(c.mass, c.temperature, *c.gamma, units);
  return PhysicalParams(c.mass, c.temperature, c.eps2.value_or(0.0), units);
}

double require_dt(const ScenarioConfig& c) {
  if (!c.dt) throw ConfigError("config", 0, "run.dt is required for the " + to_string(*c.subcommand) + " subcommand");
  return *c.dt;
}

std::string label(const hilbert::Occupation& n) { return hilbert::to_string(n); }

void run_lindblad(Context& ctx) {
  namespace m = master;
  const auto& c = ctx.cfg;
  const auto basis = hilbert::build_basis(c.ncut);
  const auto H = hilbert::hamiltonian_ho(basis, ctx.params, c.omega);
  const auto q = hilbert::q_operator(basis, ctx.params, c.omega);
  const auto qd = hilbert::heisenberg_derivative(H, q, ctx.params.hbar());
  const hilbert::Occupation state{c.state[0], c.state[1], c.state[2]};

  const auto master_gen = m::liouvillian_master(H, q, qd, ctx.params);
  const bool use_lindblad = c.generator == "lindblad";
  std::optional<m::Superoperator> lindblad_gen;
  if (use_lindblad || ctx.params.w() > 0.0) {
    lindblad_gen = m::lindblad_generator(H, m::LindbladOps::build(q, qd, ctx.params), ctx.params);
  }
  const m::Superoperator& gen = use_lindblad ? *lindblad_gen : master_gen;

  const double dt = c.dt.value_or(m::default_time_step(ctx.params, c.omega));
  const auto method = c.method == "expm" ? m::Method::expm : m::Method::rk4;
  const auto traj = m::evolve(m::DensityMatrix::from_pure(basis, state), gen, c.t_final, dt, method, c.sample_every);

  Table pop{{"t", "population", "trace", "purity", "min_eigenvalue", "hermiticity_defect"}, {}};
  double trace_err = 0.0, herm = 0.0, min_eig = 1.0;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& rho = traj.states[k];
    const double tr = rho.trace().real();
    const double me = rho.min_eigenvalue();
    trace_err = std::max(trace_err, std::abs(rho.trace() - 1.0));
    herm = std::max(herm, rho.hermiticity_defect());
    min_eig = std::min(min_eig, me);
    pop.rows.push_back({traj.times[k], rho.population(state), tr, rho.purity(), me, rho.hermiticity_defect()});
  }
  emit_table(pop, ctx.format, ctx.table_path("population"));

  const auto balance = m::emission_balance(state, q, ctx.params, c.omega);
  const double induced = m::induced_rate(state, q, qd, ctx.params);
  const double diag = m::diagonal_rate(state, gen);
  Table summary{{"quantity", "value"}, {}};
  summary.rows.push_back({std::string("state"), label(state)});
  summary.rows.push_back({std::string("gamma"), ctx.params.gamma()});
  summary.rows.push_back({std::string("w"), ctx.params.w()});
  summary.rows.push_back({std::string("spontaneous_rate"), balance.spontaneous});
  summary.rows.push_back({std::string("gamma_term_rate"), balance.total});
  summary.rows.push_back({std::string("induced_rate"), induced});
  summary.rows.push_back({std::string("diagonal_rate"), diag});
  emit_table(summary, ctx.format, ctx.table_path("summary"));

  const double scale = gen.max_abs();
  ctx.checks.bound("generator_trace_defect", gen.trace_defect() / scale, 1e-10);
  ctx.checks.bound("trace_preservation", trace_err, 1e-10);
  ctx.checks.bound("hermiticity", herm, 1e-11);
  if (use_lindblad) ctx.checks.add("positivity", min_eig >= -1e-10, min_eig, -1e-10);
  const double predicted = balance.total - induced;
  ctx.checks.bound("diagonal_rate_decomposition", (diag - predicted) / std::max(std::abs(diag), 1e-300), 1e-10);
  if (lindblad_gen) {
    const auto shift = m::anticommutator_shift(q, qd, ctx.params);
    const double rel = (master_gen - *lindblad_gen - shift).max_abs() / master_gen.max_abs();
    ctx.checks.bound("generator_relation", rel, 1e-10);
  }
}

void run_rates(Context& ctx) {
  namespace m = master;
  const auto& c = ctx.cfg;
  const auto basis = hilbert::build_basis(c.ncut);
  const auto H = hilbert::hamiltonian_ho(basis, ctx.params, c.omega);
  const auto q = hilbert::q_operator(basis, ctx.params, c.omega);
  const auto qd = hilbert::heisenberg_derivative(H, q, ctx.params.hbar());
  const SphereQuadrature quad(8);

  Table t{{"state", "quanta", "gamma_sum_formula", "gamma_golden_rule", "gamma_closed_form", "rel_difference",
           "gamma_term_rate", "induced_rate"},
          {}};
  double worst = 0.0;
  bool zeros = true;
  for (const auto& s : basis->states()) {
    const int N = hilbert::FockBasis::total(s);
    if (N > c.ncut - 2) continue;
    const auto bal = m::emission_balance(s, q, ctx.params, c.omega);
    const double golden = m::golden_rule_rate(s, basis, ctx.params, c.omega, quad);
    const double closed = m::golden_rule_closed_form(s, basis, ctx.params, c.omega);
    const double scale = std::max({std::abs(bal.spontaneous), std::abs(golden), std::abs(closed)});
    double rel = 0.0;
    if (scale > 0.0) {
      rel = std::max({std::abs(bal.spontaneous - golden), std::abs(bal.spontaneous - closed),
                      std::abs(golden - closed)}) /
            scale;
    }
    worst = std::max(worst, rel);
    if (N <= 1 && (bal.spontaneous != 0.0 || golden != 0.0)) zeros = false;
    t.rows.push_back({label(s), static_cast<long long>(N), bal.spontaneous, golden, closed, rel, bal.total,
                      m::induced_rate(s, q, qd, ctx.params)});
  }
  emit_table(t, ctx.format, ctx.table_path("rates"));
  ctx.checks.bound("rate_formula_consistency", worst, 1e-9);
  ctx.checks.add("selection_rule_zeros", zeros, zeros ? 0.0 : 1.0, 0.0);
}

langevin::Potential make_potential(const ScenarioConfig& c) {
  using langevin::Potential;
  if (c.potential == "harmonic") return Potential::harmonic(c.stiffness);
  if (c.potential == "kepler-softened") return Potential::kepler_softened(c.strength, c.softening);
  std::vector<Potential::Monomial> terms;
  std::string rest = c.polynomial;
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const auto end = rest.find(';', pos);
    std::string term = rest.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    if (term.find_first_not_of(" \t") != std::string::npos) {
      Potential::Monomial mono{};
      char sep;
      std::istringstream in(term);
      in >> mono.coeff >> sep >> mono.px >> sep >> mono.py >> sep >> mono.pz;
      terms.push_back(mono);
    }
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return Potential::polynomial(std::move(terms));
}

Table trajectory_table(const std::vector<langevin::TrajectoryState>& states) {
  Table t{{"t", "x1", "x2", "x3", "v1", "v2", "v3", "E", "E_schott", "P_rad"}, {}};
  for (const auto& s : states) {
    t.rows.push_back({s.t, s.x[0], s.x[1], s.x[2], s.v[0], s.v[1], s.v[2], s.E, s.E_schott, s.P_rad});
  }
  return t;
}

// Largest relative mismatch between P_rad and -gamma hbar sum_kl qdot_kl^2.
double radiated_power_mismatch(const std::vector<langevin::TrajectoryState>& states, const PhysicalParams& p) {
  double worst = 0.0;
  for (const auto& s : states) {
    const double direct = -p.gamma() * p.hbar() * q_tensor_rate(s.v, s.a, p.c()).squared_norm();
    const double scale = std::max(std::abs(direct), std::abs(s.P_rad));
    if (scale > 0.0) worst = std::max(worst, std::abs(s.P_rad - direct) / scale);
  }
  return worst;
}

void run_classical(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto pot = make_potential(c);
  langevin::IntegratorOptions opts;
  opts.sample_every = c.sample_every;
  const auto traj = langevin::integrate_classical(Vec3(c.x0[0], c.x0[1], c.x0[2]), Vec3(c.v0[0], c.v0[1], c.v0[2]),
                                                  pot, ctx.params, require_dt(c), c.t_final, opts);
  emit_table(trajectory_table(traj.states), ctx.format, ctx.table_path("trajectory"));
  ctx.checks.bound("radiated_power_identity", radiated_power_mismatch(traj.states, ctx.params), 1e-12);
  if (traj.states.size() >= 3) {
    const auto eb = langevin::energy_balance_residual(traj.states, ctx.params);
    Table t{{"t", "lhs", "rhs", "residual"}, {}};
    for (std::size_t k = 0; k < eb.times.size(); ++k) t.rows.push_back({eb.times[k], eb.lhs[k], eb.rhs[k], eb.residual[k]});
    emit_table(t, ctx.format, ctx.table_path("energy_balance"));
  }
  ctx.checks.add("speed_below_warning", !traj.speed_warning, traj.speed_warning ? 1.0 : 0.0, 0.0,
                 "|v| stayed below the warning fraction of c");
}

void run_langevin(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto pot = make_potential(c);
  langevin::IntegratorOptions opts;
  opts.sample_every = c.sample_every;
  const auto noise = langevin::NoiseConfig::from_params(ctx.params, require_dt(c), ctx.seed, c.quantum_correction);
  // The filter gain at the Nyquist frequency is 1 + 4 c / dt^2; beyond 2 the
  // small-hbar*beta expansion behind it no longer holds.
  const double gain = 4.0 * noise.filter_coefficient / (noise.dt * noise.dt);
  if (c.quantum_correction && gain > 1.0) {
    throw std::domain_error("quantum_correction needs hbar^2 beta^2 / (6 dt^2) <= 1, got " + format_number(gain) +
                            "; raise the temperature or the step");
  }
  const auto ens = langevin::run_ensemble(Vec3(c.x0[0], c.x0[1], c.x0[2]), Vec3(c.v0[0], c.v0[1], c.v0[2]), pot,
                                          ctx.params, noise, c.t_final, static_cast<std::size_t>(c.n_trajectories),
                                          static_cast<unsigned>(ctx.threads), opts);
  double mismatch = 0.0;
  bool warning = false;
  for (std::size_t j = 0; j < ens.size(); ++j) {
    mismatch = std::max(mismatch, radiated_power_mismatch(ens[j].states, ctx.params));
    warning = warning || ens[j].speed_warning;
    if (static_cast<int>(j) < c.output_trajectories) {
      emit_table(trajectory_table(ens[j].states), ctx.format, ctx.table_path("trajectory_" + std::to_string(j)));
    }
  }
  Table t{{"t", "mean_E", "sem_E", "mean_E_schott"}, {}};
  const std::size_t samples = ens.front().states.size();
  const double n = static_cast<double>(ens.size());
  for (std::size_t k = 0; k < samples; ++k) {
    double s = 0.0, s2 = 0.0, sch = 0.0;
    for (const auto& tr : ens) {
      s += tr.states[k].E;
      s2 += tr.states[k].E * tr.states[k].E;
      sch += tr.states[k].E_schott;
    }
    const double mean = s / n;
    const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    t.rows.push_back({ens.front().states[k].t, mean, std::sqrt(var / n), sch / n});
  }
  emit_table(t, ctx.format, ctx.table_path("ensemble"));
  ctx.checks.bound("radiated_power_identity", mismatch, 1e-12);
  ctx.checks.add("speed_below_warning", !warning, warning ? 1.0 : 0.0, 0.0,
                 "|v| stayed below the warning fraction of c");
}

void run_kernels(Context& ctx) {
  const auto& c = ctx.cfg;
  const double bh = ctx.params.beta() * ctx.params.hbar();
  bath::KernelSpec spec{ctx.params, c.uv_cutoff_ratio / bh, c.quad_points, c.classical_limit};
  const auto mom = bath::thermal_kernel_moments(spec);
  const double A = bath::kernel_A_coefficient(ctx.params);
  const double target = -bh * bh / 12.0;
  Table t{{"beta_hbar_cutoff", "m0", "A", "m0_over_A", "m2_over_m0", "target_m2_over_m0", "quadrature_rel_error"}, {}};
  t.rows.push_back({c.uv_cutoff_ratio, mom.m0, A, mom.m0 / A, mom.m2 / mom.m0, target, mom.rel_error});
  emit_table(t, ctx.format, ctx.table_path("kernels"));

  Table td{{"tau", "a"}, {}};
  for (int j = 0; j <= 100; ++j) {
    const double tau = 0.1 * j / spec.uv_cutoff;
    td.rows.push_back({tau, bath::kernel_time_domain(spec, tau)});
  }
  emit_table(td, ctx.format, ctx.table_path("kernel_time"));

  ctx.checks.bound("m0_high_temperature_limit", mom.m0 / A - 1.0, 0.02);
  if (c.classical_limit) {
    ctx.checks.bound("m2_classical_limit", mom.m2 / mom.m0 / (bh * bh), 1e-12);
  } else if (c.uv_cutoff_ratio <= 0.1) {
    ctx.checks.bound("m2_coth_correction", (mom.m2 / mom.m0 - target) / std::abs(target), 0.05);
  }
}

void write_checks(const std::vector<CheckRecord>& checks, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& c : checks) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
    j["tolerance"] = c.tolerance;
    j["detail"] = c.detail;
    out << j.dump() << "\n";
  }
}

void print_checks(const std::vector<CheckRecord>& checks) {
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << format_number(c.value)
              << " tolerance=" << format_number(c.tolerance) << "\n";
  }
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  if (!config.subcommand) throw ConfigError("config", 0, "no subcommand selected");
  ScenarioConfig cfg = config;
  if (options.seed) cfg.seed = *options.seed;
  if (options.threads) cfg.threads = *options.threads;
  if (options.format) cfg.format = *options.format;
  if (!options.out_dir.empty()) cfg.directory = options.out_dir.string();
  if (cfg.threads < 1) throw ConfigError("command line", 0, "threads must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  const fs::path out_dir = cfg.directory;
  const fs::path data_dir = out_dir / "data";
  fs::create_directories(data_dir);

  RunResult result;
  std::optional<PhysicalParams> params;
  try {
    params = make_params(cfg);
    Context ctx{cfg, *params, data_dir, cfg.format, cfg.seed, cfg.threads, {}};
    switch (*cfg.subcommand) {
      case Subcommand::lindblad:
        run_lindblad(ctx);
        break;
      case Subcommand::rates:
        run_rates(ctx);
        break;
      case Subcommand::langevin:
        run_langevin(ctx);
        break;
      case Subcommand::classical:
        run_classical(ctx);
        break;
      case Subcommand::kernels:
        run_kernels(ctx);
        break;
      case Subcommand::verify:
        ctx.checks.records() = run_invariant_suite();
        break;
    }
    result.checks = std::move(ctx.checks.records());
    result.exit_code = 0;
    for (const auto& c : result.checks)
      if (!c.passed) result.exit_code = 1;
  } catch (const langevin::GuardError& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const master::EvolutionError& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const bath::QuadratureError& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const ConfigError& e) {
    result.exit_code = 2;
    result.error = e.what();
  } catch (const std::invalid_argument& e) {
    result.exit_code = 2;
    result.error = e.what();
  } catch (const std::domain_error& e) {
    result.exit_code = 2;
    result.error = e.what();
  }
  if (!result.error.empty()) result.checks.push_back({"run_completed", false, 1.0, 0.0, result.error});

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::ordered_json meta;
  meta["tool"] = "gravbath";
  meta["version"] = kVersion;
  meta["subcommand"] = to_string(*cfg.subcommand);
  meta["config"] = to_ini(cfg);
  nlohmann::ordered_json derived;
  if (params) {
    derived["gamma"] = params->gamma();
    derived["w"] = params->w();
    derived["beta"] = params->temperature() > 0.0 ? nlohmann::json(params->beta()) : nlohmann::json(nullptr);
    derived["damping_scale"] = params->damping_scale();
  }
  meta["derived"] = derived;
  meta["seed"] = cfg.seed;
  meta["threads"] = cfg.threads;
  meta["wall_time_s"] = wall;
  meta["exit_code"] = result.exit_code;
  if (!result.error.empty()) meta["error"] = result.error;
  {
    std::ofstream out(out_dir / "meta.json", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / "meta.json").string());
    out << meta.dump(2) << "\n";
  }
  write_checks(result.checks, out_dir / "checks.jsonl");
  return result;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"gravbath: master-equation, rate and Langevin simulations of a particle in a thermal graviton bath"};
  app.set_version_flag("--version", kVersion);
  std::string config_path, out_dir, format;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "Scenario config file");
  app.add_option("--out", out_dir, "Output directory (overrides [output] directory)");
  app.add_option("--seed", seed, "Master RNG seed (overrides [run] seed)");
  app.add_option("--threads", threads, "Worker threads for ensembles")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "jsonl"}));
  app.require_subcommand(1);
  const std::pair<const char*, const char*> subs[] = {
      {"lindblad", "Evolve a density matrix under the master equation"},
      {"rates", "Transition rates out of each oscillator level"},
      {"langevin", "Stochastic trajectory ensemble with induced noise"},
      {"classical", "Deterministic damped trajectory and energy balance"},
      {"kernels", "Noise kernel spectrum and moments"},
      {"verify", "Built-in self-consistency checks"}};
  for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const Subcommand sub = parse_subcommand(app.get_subcommands().front()->get_name());

  try {
    if (sub == Subcommand::verify && config_path.empty()) {
      if (out_dir.empty()) {
        const auto checks = run_invariant_suite();
        print_checks(checks);
        for (const auto& c : checks)
          if (!c.passed) return 1;
        return 0;
      }
      ScenarioConfig cfg;
      cfg.subcommand = Subcommand::verify;
      RunOptions opts;
      opts.out_dir = out_dir;
      const RunResult r = run_scenario(cfg, opts);
      print_checks(r.checks);
      return r.exit_code;
    }
    if (config_path.empty()) {
      std::cerr << "error: --config is required for " << to_string(sub) << "\n";
      return 2;
    }
    ScenarioConfig cfg = load_config(config_path);
    if (cfg.subcommand && *cfg.subcommand != sub) {
      std::cerr << "error: config selects subcommand '" << to_string(*cfg.subcommand) << "' but '"
                << to_string(sub) << "' was requested\n";
      return 2;
    }
    cfg.subcommand = sub;
    RunOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    opts.seed = seed;
    opts.threads = threads;
    if (!format.empty()) opts.format = parse_format(format);
    const RunResult r = run_scenario(cfg, opts);
    print_checks(r.checks);
    if (!r.error.empty()) std::cerr << "error: " << r.error << "\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gravbath::cli
