#ifndef UTURNLAB_CLI_CONFIG_HPP
#define UTURNLAB_CLI_CONFIG_HPP

#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "uturnlab/lab/experiments.hpp"

namespace uturnlab::cli {

// Schema or precondition violation; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PredictQuery {
  lab::CommonConfig common;
  ScaleBlockTarget<double> target = ScaleBlockTarget<double>::isotropic(1.0, 1);
  double h = 0.1;
  int k_max = 8;
  double hbar = 0.0;
};

struct PhaseQuery {
  lab::CommonConfig common;
  double kappa = 1.0;
  double ratio = 1.0;
};

struct Run {
  std::string experiment;
  std::variant<lab::ConcentrationConfig, lab::OrbitStatsConfig, lab::ContractionConfig,
               lab::MixingConfig, lab::SampleConfig, PredictQuery, PhaseQuery>
      config;
  nlohmann::json normalized;  // canonical config echoed into reports
};

// Parses and validates a full run description.  Unknown fields are rejected
// and all numeric fields are range-checked before any computation starts.
Run parse_run(const nlohmann::json& doc);

// Target descriptions: an object {"preset": ...} or the shorthand string
// "isotropic:m,d" | "two_scale:m1,m2,d1,d2" | "harmonic_chain:d".
ScaleBlockTarget<double> parse_target(const nlohmann::json& node, const std::string& path);
nlohmann::json target_to_json(const ScaleBlockTarget<double>& target);

// Executes the run: writes report.json and CSV tables into the output
// directory, prints one line per pass/fail flag.  Returns 0 when every flag
// passed, 1 otherwise.
int execute(const Run& run);

// Full CLI entry point (argv-style, argv[0] ignored).  Returns 0 on success,
// 1 on tolerance failure, 2 on configuration errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace uturnlab::cli

#endif
