#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "strichartz/ansatz.hpp"
#include "strichartz/error.hpp"
#include "strichartz/optimize.hpp"
#include "strichartz/profiles.hpp"
#include "strichartz/ratio.hpp"

namespace strichartz {

enum class ExperimentKind {
  Constants,
  Ratio,
  SweepSoliton,
  SweepBreather,
  HermiteStability,
  HermiteOpt,
  Train,
  FitGap,
  FitBreather,
  Crossover
};

const char* to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment(const std::string& name);

struct Violation {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string field;
  std::string message;
};

std::string describe(const Violation& v);

/// Config rejected by validation; carries every violation found.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<Violation> violations);
  std::vector<Violation> violations;
};

struct GridOverride {
  std::optional<double> R, T;
  std::optional<std::size_t> N, M;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Constants;
  PropagatorKind propagator = PropagatorKind::Airy;
  int d = 1;
  double q = 6.0;
  double r = 6.0;
  std::optional<double> gamma;  // filled from the pair for critical Airy runs
  bool critical = true;
  GridOverride grid;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t iterations = 2000;
  Precision precision = Precision::Double;
  QuadratureRule rule = QuadratureRule::Rectangle;
  MLPArchitecture arch;
  CyclicSchedule schedule;
  double ridge = 1e-6;
  double boundary_weight = 1.0;
  std::size_t log_every = 100;
  std::size_t max_retries = 2;
  std::vector<double> params;                     // alphas, soliton p, half-times or r values
  std::vector<std::pair<double, double>> pairs;   // (q, r) for constants
  std::optional<ProfileSpec> profile;
  HermiteOptions hermite;
  int n_max = 20;
  double beta = 1.0;
  double window_lo = 2.0;
  double window_hi = 1e300;
  std::string input;
  std::filesystem::path output_dir = "out";
  /// Normalized config (defaults filled in), hashed into the manifest.
  nlohmann::json resolved;
};

struct ParseOutcome {
  std::optional<ExperimentConfig> config;  // empty when any error was found
  std::vector<Violation> violations;
};

/// Parses and checks a config document. Never throws for bad input.
ParseOutcome analyse_config(const nlohmann::json& doc);

/// The violations alone (errors and warnings).
std::vector<Violation> validate_config(const nlohmann::json& doc);

/// Throws ConfigError when any error-level violation exists.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads a JSON config file; parse failures become ConfigError.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Ratio settings implied by the config for the given grid.
RatioConfig ratio_config(const ExperimentConfig& cfg, const SpaceTimeGrid& grid);

/// Lattice used by the experiment when no override is given, with overrides applied.
SpaceTimeGrid experiment_grid(const ExperimentConfig& cfg);

/// A template config listing every key with its default.
nlohmann::json default_config_json(ExperimentKind kind);

struct RunSummary {
  std::filesystem::path manifest;
  std::vector<std::string> artifacts;
};

/// Runs the experiment and writes its artifacts plus manifest.json into
/// cfg.output_dir. Training divergence surfaces as DivergenceError after the
/// last valid checkpoint has been written.
RunSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace strichartz
