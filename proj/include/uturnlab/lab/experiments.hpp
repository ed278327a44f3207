#ifndef UTURNLAB_LAB_EXPERIMENTS_HPP
#define UTURNLAB_LAB_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uturnlab/flows.hpp"
#include "uturnlab/hmc.hpp"
#include "uturnlab/lab/report.hpp"
#include "uturnlab/nuts.hpp"
#include "uturnlab/target.hpp"

namespace uturnlab::lab {

struct CommonConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = auto
  std::string output_dir = "out";
};

// Either a NUTS kernel (orbit params) or an HMC kernel (law + flow).
struct SamplerConfig {
  enum class Kind { nuts, hmc } kind = Kind::nuts;
  // nuts
  double h = 0.1;
  int k_max = 8;
  FlowKind flow = FlowKind::exact;
  // hmc
  std::optional<IntegrationTimeLaw<double>> law;

  OrbitParams<double> orbit_params() const { return {h, k_max, flow}; }
  FlowVariant<double> flow_variant() const {
    return flow == FlowKind::leapfrog ? FlowVariant<double>::leapfrog(h)
                                      : FlowVariant<double>::exact(h);
  }
};

enum class StartKind { zero, stationary, overdispersed };

// --- concentration -------------------------------------------------------

struct ConcentrationConfig {
  CommonConfig common;
  std::vector<ScaleBlockTarget<double>> targets;
  FlowKind flow = FlowKind::exact;
  double h = 0.05;       // grid step (leapfrog snaps times to multiples)
  double t_max = 6.2832;  // grid covers [0, t_max]^2
  int grid_n = 20;
  std::int64_t n_draws = 20000;
  double mean_cell_fraction = 0.95;  // trace-formula flag threshold
  double std_ratio_tolerance = 0.30;
  double strong_concentration_ratio = 10.0;
};

ExperimentReport concentration_experiment(const ConcentrationConfig& config);

// --- orbit statistics -----------------------------------------------------

struct OrbitStatsConfig {
  CommonConfig common;
  ScaleBlockTarget<double> target = ScaleBlockTarget<double>::isotropic(1.0, 1);
  SamplerConfig sampler;  // kind must be nuts
  std::int64_t n_transitions = 10000;
  double shell_scale = 3.0;
  double empirical_band_factor = 4.0;  // delta-hat = factor * measured std
  double dominance_threshold = 0.90;
  double placement_p_threshold = 0.001;
  bool emit_trace = true;
};

ExperimentReport orbit_statistics_experiment(const OrbitStatsConfig& config);

// --- contraction ----------------------------------------------------------

struct ContractionConfig {
  CommonConfig common;
  ScaleBlockTarget<double> target = ScaleBlockTarget<double>::isotropic(1.0, 1);
  IntegrationTimeLaw<double> law = IntegrationTimeLaw<double>::point(0.0);
  FlowKind flow = FlowKind::exact;
  double flow_step = 0.1;
  std::int64_t n_pairs = 10000;
  int n_steps = 1;
};

ExperimentReport contraction_experiment(const ContractionConfig& config);

// --- mixing ---------------------------------------------------------------

struct MixingConfig {
  CommonConfig common;
  ScaleBlockTarget<double> target = ScaleBlockTarget<double>::isotropic(1.0, 1);
  SamplerConfig sampler;
  int n_replicas = 200;
  int horizon = 100;
  std::vector<int> checkpoints;  // empty = every transition
  StartKind start = StartKind::zero;
  double epsilon = 0.05;
  double shell_scale = 3.0;
  bool monitor_shells = true;
  std::optional<double> mixing_pass_threshold;  // flag: estimate <= threshold
};

ExperimentReport mixing_experiment(const MixingConfig& config);

// --- sampling driver -------------------------------------------------------

struct SampleConfig {
  CommonConfig common;
  ScaleBlockTarget<double> target = ScaleBlockTarget<double>::isotropic(1.0, 1);
  SamplerConfig sampler;
  int n_replicas = 1;
  int n_transitions = 100;
  StartKind start = StartKind::stationary;
  bool emit_trace = true;
  bool radial_check = false;  // per-block radial KS against chi-square at the end
  double radial_epsilon = 0.05;
};

ExperimentReport sample_experiment(const SampleConfig& config);

}  // namespace uturnlab::lab

#endif
