#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gravbath::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid configuration. line() is 0 when the problem is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class Subcommand { lindblad, rates, langevin, classical, kernels, verify };
enum class Format { csv, jsonl };

std::string to_string(Subcommand s);
std::string to_string(Format f);
/// Throw std::invalid_argument on unknown names.
Subcommand parse_subcommand(const std::string& s);
Format parse_format(const std::string& s);

/// Scenario description. Sections in the config file: [scenario], [params],
/// [model], [run], [output]. Optional fields that are unset keep their
/// documented defaults and are not echoed.
struct ScenarioConfig {
  std::optional<Subcommand> subcommand;

  // [params]
  double mass = 1.0;
  double temperature = 1.0;
  std::optional<double> eps2;
  std::optional<double> gamma;
  double hbar = 1.0;
  double c = 1.0;
  double kB = 1.0;

  // [model]
  int ncut = 4;
  double omega = 1.0;
  std::array<int, 3> state{2, 0, 0};
  std::string generator = "lindblad";  // lindblad | master
  std::string potential = "harmonic";  // harmonic | kepler-softened | polynomial
  double stiffness = 1.0;
  double strength = 1.0;
  double softening = 0.1;
  std::string polynomial;  // "coeff:px:py:pz; ..."
  std::array<double, 3> x0{0.1, 0.0, 0.0};
  std::array<double, 3> v0{0.0, 0.1, 0.0};
  double uv_cutoff_ratio = 0.05;  // beta hbar Lambda
  int quad_points = 64;
  bool classical_limit = false;

  // [run]
  std::optional<double> dt;
  double t_final = 1.0;
  int sample_every = 1;
  std::string method = "rk4";  // rk4 | expm
  int n_trajectories = 1;
  int output_trajectories = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  bool quantum_correction = false;

  // [output]
  std::string directory = "out";
  Format format = Format::csv;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Parses the INI-style text. Unknown sections or keys, duplicates, malformed
/// values and inconsistent combinations raise ConfigError with the line.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_ini(c)) == c.
std::string to_ini(const ScenarioConfig& config);

/// Shortest decimal string that reads back to the same double.
std::string format_number(double x);

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// CSV with a header row, or one JSON object per row with keys in column
/// order. Throws std::runtime_error for unwritable paths and
/// std::invalid_argument for rows whose width differs from the header.
void emit_table(const Table& table, Format format, const std::filesystem::path& path);

struct CheckRecord {
  std::string name;
  bool passed;
  double value;
  double tolerance;
  std::string detail;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<Format> format;
};

struct RunResult {
  int exit_code = 0;
  std::vector<CheckRecord> checks;
  std::string error;
};

/// Runs one scenario and writes meta.json, data/ and checks.jsonl below the
/// output directory (RunOptions::out_dir overrides the config). Exit code 0
/// when every check passes, 1 when a check fails, 3 when a numerical guard
/// trips.
RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options);

/// Library invariant suite used by the verify subcommand.
std::vector<CheckRecord> run_invariant_suite();

/// Entry point of the gravbath executable.
int main_entry(int argc, char** argv);

}  // namespace gravbath::cli
