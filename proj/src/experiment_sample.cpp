#include <algorithm>
#include <cmath>
#include <vector>

#include "experiment_util.hpp"
#include "uturnlab/lab/experiments.hpp"
#include "uturnlab/parallel.hpp"
#include "uturnlab/stats.hpp"

namespace uturnlab::lab {

ExperimentReport sample_experiment(const SampleConfig& config) {
  if (config.n_replicas < 1 || config.n_transitions < 1)
    throw std::invalid_argument("sample: replicas and transitions must be >= 1");

  WallTimer timer;
  ExperimentReport report;
  report.experiment = "sample";
  report.seed = config.common.seed;

  const auto& target = config.target;
  const auto n_blocks = static_cast<std::size_t>(target.num_blocks());
  const bool is_nuts = config.sampler.kind == SamplerConfig::Kind::nuts;
  const auto n = static_cast<std::size_t>(config.n_replicas) *
                 static_cast<std::size_t>(config.n_transitions);

  if (is_nuts) {
    NutsSampler<double> probe(target, config.sampler.orbit_params());
  } else {
    config.sampler.law->check_compatible(config.sampler.flow_variant());
  }

  std::vector<TransitionRecord<double>> records(is_nuts ? n : 0);
  std::vector<double> radii(n * n_blocks);
  std::vector<double> final_radii(static_cast<std::size_t>(config.n_replicas) * n_blocks);

  parallel_tasks(config.n_replicas, config.common.threads, [&](std::int64_t replica) {
    RngStream rng = RngStream::substream(config.common.seed, static_cast<std::uint64_t>(replica));
    Vec<double> x = start_position(target, config.start, rng);
    NutsSampler<double> sampler(target, config.sampler.orbit_params());
    auto flow = config.sampler.flow_variant();
    for (int step = 0; step < config.n_transitions; ++step) {
      auto slot = static_cast<std::size_t>(replica) * static_cast<std::size_t>(config.n_transitions) +
                  static_cast<std::size_t>(step);
      if (is_nuts) {
        records[slot] = sampler.step(x, rng);
      } else {
        x = hmc_transition(target, x, *config.sampler.law, flow, rng);
      }
      auto r = block_radii(target, x);
      for (std::size_t b = 0; b < n_blocks; ++b) radii[slot * n_blocks + b] = r[b];
    }
    auto r = block_radii(target, x);
    for (std::size_t b = 0; b < n_blocks; ++b)
      final_radii[static_cast<std::size_t>(replica) * n_blocks + b] = r[b];
  });

  if (config.emit_trace) {
    std::vector<std::string> columns{"seed", "replica", "transition"};
    if (is_nuts)
      for (const char* c : {"orbit_len", "min_index", "stop_reason", "iota", "delta_h_iota"})
        columns.emplace_back(c);
    for (std::size_t b = 0; b < n_blocks; ++b)
      columns.push_back("radial_block_" + std::to_string(b));
    auto& table = report.table("chain", std::move(columns));
    for (int replica = 0; replica < config.n_replicas; ++replica) {
      for (int step = 0; step < config.n_transitions; ++step) {
        auto slot = static_cast<std::size_t>(replica) *
                        static_cast<std::size_t>(config.n_transitions) +
                    static_cast<std::size_t>(step);
        auto& row = table.add_row();
        row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
        row.push_back(format_integer(replica));
        row.push_back(format_integer(step));
        if (is_nuts) {
          const auto& rec = records[slot];
          row.push_back(format_integer(rec.orbit_length));
          row.push_back(format_integer(rec.min_index));
          row.push_back(to_string(rec.stop));
          row.push_back(format_integer(rec.iota));
          row.push_back(format_number(rec.delta_h_iota));
        }
        for (std::size_t b = 0; b < n_blocks; ++b)
          row.push_back(format_number(radii[slot * n_blocks + b]));
      }
    }
  }

  if (config.radial_check) {
    std::vector<double> sample(static_cast<std::size_t>(config.n_replicas));
    double worst = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      for (int r = 0; r < config.n_replicas; ++r)
        sample[static_cast<std::size_t>(r)] =
            final_radii[static_cast<std::size_t>(r) * n_blocks + b];
      double dof = static_cast<double>(target.block_dim(static_cast<Index>(b)));
      worst = std::max(worst,
                       ks_statistic(sample, [&](double v) { return chi_square_cdf(dof, v); }));
    }
    report.add_flag("radial_ks_within", worst < config.radial_epsilon, worst,
                    config.radial_epsilon,
                    "max per-block radial KS against chi-square after the final transition");
  }

  report.wall_ms = timer.elapsed_ms();
  return report;
}

}  // namespace uturnlab::lab
