#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gravbath/cli.hpp"

namespace gravbath::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

struct Ctx {
  const std::string& source;
  int line;
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source, line, msg); }
};

double to_double(const std::string& s, const Ctx& ctx) {
  double x = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || p != end || s.empty()) ctx.fail("expected a number, got '" + s + "'");
  if (!std::isfinite(x)) ctx.fail("expected a finite number, got '" + s + "'");
  return x;
}

template <class Int>
Int to_integer(const std::string& s, const Ctx& ctx) {
  Int x{};
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || p != end || s.empty()) ctx.fail("expected an integer, got '" + s + "'");
  return x;
}

bool to_bool(const std::string& s, const Ctx& ctx) {
  if (s == "true") return true;
  if (s == "false") return false;
  ctx.fail("expected true or false, got '" + s + "'");
}

std::vector<std::string> triple(std::string s, const Ctx& ctx) {
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
  auto parts = split(s, ',');
  if (parts.size() != 3) ctx.fail("expected three comma-separated values, got '" + s + "'");
  return parts;
}

std::string one_of(const std::string& s, std::initializer_list<const char*> allowed, const Ctx& ctx) {
  std::string list;
  for (const char* a : allowed) {
    if (s == a) return s;
    list += list.empty() ? a : std::string(", ") + a;
  }
  ctx.fail("expected one of {" + list + "}, got '" + s + "'");
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const Ctx&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"scenario",
       {{"subcommand",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           try {
             c.subcommand = parse_subcommand(v);
           } catch (const std::invalid_argument& e) {
             ctx.fail(e.what());
           }
         }}}},
      {"params",
       {{"mass", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.mass = to_double(v, ctx); }},
        {"temperature",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.temperature = to_double(v, ctx); }},
        {"eps2", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.eps2 = to_double(v, ctx); }},
        {"gamma", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.gamma = to_double(v, ctx); }},
        {"hbar", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.hbar = to_double(v, ctx); }},
        {"c", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.c = to_double(v, ctx); }},
        {"kB", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.kB = to_double(v, ctx); }}}},
      {"model",
       {{"ncut", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.ncut = to_integer<int>(v, ctx); }},
        {"omega", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.omega = to_double(v, ctx); }},
        {"state",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           auto p = triple(v, ctx);
           for (int k = 0; k < 3; ++k) c.state[static_cast<std::size_t>(k)] = to_integer<int>(p[static_cast<std::size_t>(k)], ctx);
         }},
        {"generator",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           c.generator = one_of(v, {"lindblad", "master"}, ctx);
         }},
        {"potential",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           c.potential = one_of(v, {"harmonic", "kepler-softened", "polynomial"}, ctx);
         }},
        {"stiffness", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.stiffness = to_double(v, ctx); }},
        {"strength", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.strength = to_double(v, ctx); }},
        {"softening", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.softening = to_double(v, ctx); }},
        {"polynomial",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           for (const auto& term : split(v, ';')) {
             if (term.empty()) continue;
             auto f = split(term, ':');
             if (f.size() != 4) ctx.fail("polynomial terms are coeff:px:py:pz, got '" + term + "'");
             to_double(f[0], ctx);
             for (int k = 1; k < 4; ++k)
               if (to_integer<int>(f[static_cast<std::size_t>(k)], ctx) < 0) ctx.fail("negative exponent in '" + term + "'");
           }
           c.polynomial = v;
         }},
        {"x0",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           auto p = triple(v, ctx);
           for (std::size_t k = 0; k < 3; ++k) c.x0[k] = to_double(p[k], ctx);
         }},
        {"v0",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           auto p = triple(v, ctx);
           for (std::size_t k = 0; k < 3; ++k) c.v0[k] = to_double(p[k], ctx);
         }},
        {"uv_cutoff_ratio",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.uv_cutoff_ratio = to_double(v, ctx); }},
        {"quad_points",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.quad_points = to_integer<int>(v, ctx); }},
        {"classical_limit",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.classical_limit = to_bool(v, ctx); }}}},
      {"run",
       {{"dt", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.dt = to_double(v, ctx); }},
        {"t_final", [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.t_final = to_double(v, ctx); }},
        {"sample_every",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.sample_every = to_integer<int>(v, ctx); }},
        {"method",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.method = one_of(v, {"rk4", "expm"}, ctx); }},
        {"n_trajectories",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.n_trajectories = to_integer<int>(v, ctx); }},
        {"output_trajectories",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           c.output_trajectories = to_integer<int>(v, ctx);
         }},
        {"seed",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.seed = to_integer<std::uint64_t>(v, ctx); }},
        {"threads",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.threads = to_integer<int>(v, ctx); }},
        {"quantum_correction",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) { c.quantum_correction = to_bool(v, ctx); }}}},
      {"output",
       {{"directory",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           if (v.empty()) ctx.fail("directory must not be empty");
           c.directory = v;
         }},
        {"format",
         [](ScenarioConfig& c, const std::string& v, const Ctx& ctx) {
           try {
             c.format = parse_format(v);
           } catch (const std::invalid_argument& e) {
             ctx.fail(e.what());
           }
         }}}},
  };
  return s;
}

void validate(const ScenarioConfig& c, const std::map<std::string, int>& lines, const std::string& source) {
  auto at = [&](const std::string& key) {
    auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  };
  auto require = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(source, at(key), msg);
  };
  require(!(c.eps2 && c.gamma), at("params.eps2") > at("params.gamma") ? "params.eps2" : "params.gamma",
          "set either eps2 or gamma, not both");
  require(c.mass > 0.0, "params.mass", "mass must be positive");
  require(c.temperature >= 0.0, "params.temperature", "temperature must be non-negative");
  require(!c.eps2 || *c.eps2 >= 0.0, "params.eps2", "eps2 must be non-negative");
  require(!c.gamma || *c.gamma >= 0.0, "params.gamma", "gamma must be non-negative");
  require(c.hbar > 0.0, "params.hbar", "hbar must be positive");
  require(c.c > 0.0, "params.c", "c must be positive");
  require(c.kB > 0.0, "params.kB", "kB must be positive");
  require(c.ncut >= 2, "model.ncut", "ncut must be >= 2");
  require(c.omega > 0.0, "model.omega", "omega must be positive");
  require(c.state[0] >= 0 && c.state[1] >= 0 && c.state[2] >= 0, "model.state", "occupations must be >= 0");
  require(c.state[0] + c.state[1] + c.state[2] <= c.ncut - 2, "model.state",
          "state must carry at most ncut - 2 quanta to stay clear of the truncation edge");
  require(c.stiffness > 0.0, "model.stiffness", "stiffness must be positive");
  require(c.strength > 0.0, "model.strength", "strength must be positive");
  require(c.softening > 0.0, "model.softening", "softening must be positive");
  require(c.potential != "polynomial" || !c.polynomial.empty(), "model.potential",
          "polynomial potential needs model.polynomial terms");
  require(c.uv_cutoff_ratio > 0.0, "model.uv_cutoff_ratio", "uv_cutoff_ratio must be positive");
  require(c.quad_points >= 64, "model.quad_points", "quad_points must be >= 64");
  require(!c.dt || *c.dt > 0.0, "run.dt", "dt must be positive");
  require(c.t_final >= 0.0, "run.t_final", "t_final must be non-negative");
  require(c.sample_every >= 1, "run.sample_every", "sample_every must be >= 1");
  require(c.n_trajectories >= 1, "run.n_trajectories", "n_trajectories must be >= 1");
  require(c.output_trajectories >= 0 && c.output_trajectories <= c.n_trajectories, "run.output_trajectories",
          "output_trajectories must lie in [0, n_trajectories]");
  require(c.threads >= 1, "run.threads", "threads must be >= 1");
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::lindblad:
      return "lindblad";
    case Subcommand::rates:
      return "rates";
    case Subcommand::langevin:
      return "langevin";
    case Subcommand::classical:
      return "classical";
    case Subcommand::kernels:
      return "kernels";
    case Subcommand::verify:
      return "verify";
  }
  return "unknown";
}

std::string to_string(Format f) { return f == Format::csv ? "csv" : "jsonl"; }

Subcommand parse_subcommand(const std::string& s) {
  for (auto sc : {Subcommand::lindblad, Subcommand::rates, Subcommand::langevin, Subcommand::classical,
                  Subcommand::kernels, Subcommand::verify})
    if (to_string(sc) == s) return sc;
  throw std::invalid_argument("unknown subcommand '" + s + "'");
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "jsonl") return Format::jsonl;
  throw std::invalid_argument("unknown format '" + s + "' (expected csv or jsonl)");
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  ScenarioConfig cfg;
  std::map<std::string, int> lines;
  const auto& sch = schema();
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const Ctx ctx{source, line_no};
    std::string line = trim(raw);
    // ';' also separates polynomial terms, so it only comments out whole lines.
    if (line.empty() || line.front() == ';') continue;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail("malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!sch.count(section)) ctx.fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) ctx.fail("expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) ctx.fail("key '" + key + "' appears before any section header");
    const auto& keys = sch.at(section);
    auto it = keys.find(key);
    if (it == keys.end()) ctx.fail("unknown key '" + key + "' in section [" + section + "]");
    const std::string full = section + "." + key;
    if (lines.count(full)) {
      ctx.fail("duplicate key '" + key + "' (first set on line " + std::to_string(lines[full]) + ")");
    }
    lines[full] = line_no;
    it->second(cfg, value, ctx);
  }
  validate(cfg, lines, source);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_ini(const ScenarioConfig& c) {
  std::ostringstream o;
  auto trip = [](const auto& a) {
    std::string s;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k) s += ", ";
      if constexpr (std::is_same_v<std::decay_t<decltype(a[0])>, double>) {
        s += format_number(a[k]);
      } else {
        s += std::to_string(a[k]);
      }
    }
    return s;
  };
  auto b = [](bool v) { return v ? "true" : "false"; };
  if (c.subcommand) o << "[scenario]\nsubcommand = " << to_string(*c.subcommand) << "\n\n";
  o << "[params]\n";
  o << "mass = " << format_number(c.mass) << "\n";
  o << "temperature = " << format_number(c.temperature) << "\n";
  if (c.eps2) o << "eps2 = " << format_number(*c.eps2) << "\n";
  if (c.gamma) o << "gamma = " << format_number(*c.gamma) << "\n";
  o << "hbar = " << format_number(c.hbar) << "\n";
  o << "c = " << format_number(c.c) << "\n";
  o << "kB = " << format_number(c.kB) << "\n\n";
  o << "[model]\n";
  o << "ncut = " << c.ncut << "\n";
  o << "omega = " << format_number(c.omega) << "\n";
  o << "state = " << trip(c.state) << "\n";
  o << "generator = " << c.generator << "\n";
  o << "potential = " << c.potential << "\n";
  o << "stiffness = " << format_number(c.stiffness) << "\n";
  o << "strength = " << format_number(c.strength) << "\n";
  o << "softening = " << format_number(c.softening) << "\n";
  if (!c.polynomial.empty()) o << "polynomial = " << c.polynomial << "\n";
  o << "x0 = " << trip(c.x0) << "\n";
  o << "v0 = " << trip(c.v0) << "\n";
  o << "uv_cutoff_ratio = " << format_number(c.uv_cutoff_ratio) << "\n";
  o << "quad_points = " << c.quad_points << "\n";
  o << "classical_limit = " << b(c.classical_limit) << "\n\n";
  o << "[run]\n";
  if (c.dt) o << "dt = " << format_number(*c.dt) << "\n";
  o << "t_final = " << format_number(c.t_final) << "\n";
  o << "sample_every = " << c.sample_every << "\n";
  o << "method = " << c.method << "\n";
  o << "n_trajectories = " << c.n_trajectories << "\n";
  o << "output_trajectories = " << c.output_trajectories << "\n";
  o << "seed = " << c.seed << "\n";
  o << "threads = " << c.threads << "\n";
  o << "quantum_correction = " << b(c.quantum_correction) << "\n\n";
  o << "[output]\n";
  o << "directory = " << c.directory << "\n";
  o << "format = " << to_string(c.format) << "\n";
  return o.str();
}

}  // namespace gravbath::cli
