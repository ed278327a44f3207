#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "uturnlab/cli/config.hpp"
#include "uturnlab/lab/predictor.hpp"

namespace uturnlab::cli {

namespace {

lab::ExperimentReport run_predict(const PredictQuery& query) {
  lab::ExperimentReport report;
  report.experiment = "predict";
  report.seed = query.common.seed;
  auto prediction = lab::critical_orbit_length(query.target, query.h, query.k_max, query.hbar);
  report.set_value("t_star", prediction.t_star);
  report.set_value("k_star", prediction.k_star);
  report.set_value("capped", prediction.capped ? 1.0 : 0.0);
  report.set_value("orbit_length", static_cast<double>(Index(1) << prediction.k_star));
  std::printf("t_star = %s, k_star = %d, capped = %s\n",
              lab::format_number(prediction.t_star).c_str(), prediction.k_star,
              prediction.capped ? "true" : "false");
  return report;
}

lab::ExperimentReport run_phase(const PhaseQuery& query) {
  lab::ExperimentReport report;
  report.experiment = "phase";
  report.seed = query.common.seed;
  auto result = lab::phase_membership(query.kappa, query.ratio);
  report.set_value("accelerated", result.accelerated ? 1.0 : 0.0);
  report.set_value("boundary", result.boundary ? 1.0 : 0.0);
  report.set_value("min_g", result.min_g);
  report.set_value("argmin_t", result.argmin_t);
  report.set_value("boundary_constant", lab::phase_boundary_constant());
  std::printf("accelerated: %s\n", result.accelerated ? "true" : "false");
  return report;
}

}  // namespace

namespace {

void warn_if_marginal(const ScaleBlockTarget<double>& target, FlowKind kind, double h) {
  if (kind != FlowKind::leapfrog) return;
  if (leapfrog_stability(target, h) == StabilityRegime::marginal)
    std::cerr << "warning: h^2 max(m) in [1, 4); outside the guaranteed-stability regime\n";
}

}  // namespace

int execute(const Run& run) {
  if (const auto* config = std::get_if<lab::OrbitStatsConfig>(&run.config)) {
    warn_if_marginal(config->target, config->sampler.flow, config->sampler.h);
  } else if (const auto* config = std::get_if<lab::MixingConfig>(&run.config)) {
    warn_if_marginal(config->target, config->sampler.flow, config->sampler.h);
  } else if (const auto* config = std::get_if<lab::SampleConfig>(&run.config)) {
    warn_if_marginal(config->target, config->sampler.flow, config->sampler.h);
  } else if (const auto* config = std::get_if<lab::ContractionConfig>(&run.config)) {
    warn_if_marginal(config->target, config->flow, config->flow_step);
  }

  lab::ExperimentReport report;
  if (const auto* config = std::get_if<lab::ConcentrationConfig>(&run.config)) {
    report = lab::concentration_experiment(*config);
  } else if (const auto* config = std::get_if<lab::OrbitStatsConfig>(&run.config)) {
    report = lab::orbit_statistics_experiment(*config);
  } else if (const auto* config = std::get_if<lab::ContractionConfig>(&run.config)) {
    report = lab::contraction_experiment(*config);
  } else if (const auto* config = std::get_if<lab::MixingConfig>(&run.config)) {
    report = lab::mixing_experiment(*config);
  } else if (const auto* config = std::get_if<lab::SampleConfig>(&run.config)) {
    report = lab::sample_experiment(*config);
  } else if (const auto* query = std::get_if<PredictQuery>(&run.config)) {
    report = run_predict(*query);
  } else if (const auto* query = std::get_if<PhaseQuery>(&run.config)) {
    report = run_phase(*query);
  }

  report.config_echo = run.normalized;

  std::string output_dir = "out";
  std::visit([&](const auto& config) { output_dir = config.common.output_dir; }, run.config);
  report.write(output_dir);

  std::fputs(report.summary().c_str(), stdout);
  return report.all_passed() ? 0 : 1;
}

}  // namespace uturnlab::cli
