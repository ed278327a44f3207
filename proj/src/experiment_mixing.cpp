#include <algorithm>
#include <cmath>
#include <vector>

#include "experiment_util.hpp"
#include "uturnlab/lab/experiments.hpp"
#include "uturnlab/parallel.hpp"
#include "uturnlab/stats.hpp"

namespace uturnlab::lab {

ExperimentReport mixing_experiment(const MixingConfig& config) {
  if (config.n_replicas < 10) throw std::invalid_argument("mixing: n_replicas must be >= 10");
  if (config.horizon < 1) throw std::invalid_argument("mixing: horizon must be >= 1");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("mixing: epsilon must be positive");

  std::vector<int> checkpoints = config.checkpoints;
  if (checkpoints.empty()) {
    checkpoints.resize(static_cast<std::size_t>(config.horizon));
    for (int i = 0; i < config.horizon; ++i) checkpoints[static_cast<std::size_t>(i)] = i + 1;
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  if (checkpoints.front() < 1 || checkpoints.back() > config.horizon)
    throw std::invalid_argument("mixing: checkpoints must lie in [1, horizon]");

  WallTimer timer;
  ExperimentReport report;
  report.experiment = "mixing";
  report.seed = config.common.seed;

  const auto& target = config.target;
  const auto n_blocks = static_cast<std::size_t>(target.num_blocks());
  const auto n_cp = checkpoints.size();
  const int n_replicas = config.n_replicas;

  const bool is_nuts = config.sampler.kind == SamplerConfig::Kind::nuts;
  const bool record_uniformization = is_nuts && config.sampler.flow == FlowKind::leapfrog;
  const double hbar =
      config.sampler.flow == FlowKind::leapfrog ? config.sampler.h : 0.0;

  // surface kernel construction errors here rather than inside worker threads
  if (is_nuts) {
    NutsSampler<double> probe(target, config.sampler.orbit_params());
  } else {
    config.sampler.law->check_compatible(config.sampler.flow_variant());
  }

  auto monitor_shell = ShellSpec<double>::scaled(target, config.shell_scale);
  ShellSpec<double> shell0 = monitor_shell;
  if (config.start == StartKind::zero) {
    // the zero start sits on the boundary of the widest valid shell
    for (Index i = 0; i < target.num_blocks(); ++i)
      shell0.alpha[static_cast<std::size_t>(i)] = static_cast<double>(target.block_dim(i));
  }

  std::vector<double> radii(static_cast<std::size_t>(n_replicas) * n_cp * n_blocks);
  std::vector<int> exit_step(static_cast<std::size_t>(n_replicas), 0);
  std::vector<double> unif_threshold_sum(static_cast<std::size_t>(n_replicas), 0.0);
  std::vector<std::int64_t> unif_count(static_cast<std::size_t>(n_replicas), 0);

  parallel_tasks(n_replicas, config.common.threads, [&](std::int64_t replica) {
    RngStream rng = RngStream::substream(config.common.seed, static_cast<std::uint64_t>(replica));
    Vec<double> x = start_position(target, config.start, rng);

    NutsSampler<double> sampler(target, config.sampler.orbit_params());
    OrbitTrace<double> trace;
    auto flow = config.sampler.flow_variant();

    int exit_at = config.horizon + 1;
    std::size_t next_cp = 0;
    for (int step = 1; step <= config.horizon; ++step) {
      if (is_nuts) {
        Vec<double> v = rng.gaussian_vector<double>(target.dim());
        bool in_e = !record_uniformization ||
                    in_velocity_set(target, x, v, monitor_shell);
        PhasePoint<double> p{std::move(x), std::move(v)};
        sampler.build_orbit(p, rng, trace);
        if (record_uniformization) {
          double threshold = sampler.uniform_part_probability(trace);
          unif_threshold_sum[static_cast<std::size_t>(replica)] += in_e ? threshold : 0.0;
          ++unif_count[static_cast<std::size_t>(replica)];
        }
        Index iota = sampler.select_index(trace, rng);
        x = sampler.position_at(p, iota);
      } else {
        x = hmc_transition(target, x, *config.sampler.law, flow, rng);
      }

      if (config.monitor_shells && exit_at > config.horizon) {
        auto grown = shell_growth(shell0, monitor_shell.r, hbar,
                                  static_cast<Index>(step), target);
        if (!in_position_shell(target, x, grown)) exit_at = step;
      }
      if (next_cp < n_cp && checkpoints[next_cp] == step) {
        auto r = block_radii(target, x);
        for (std::size_t b = 0; b < n_blocks; ++b)
          radii[(static_cast<std::size_t>(replica) * n_cp + next_cp) * n_blocks + b] = r[b];
        ++next_cp;
      }
    }
    exit_step[static_cast<std::size_t>(replica)] = exit_at;
  });

  // radial KS against the chi-square stationary law, per checkpoint and block
  auto& ks_table = report.table("radial_ks", {"seed", "checkpoint", "block", "ks"});
  int estimate = -1;
  std::vector<double> sample(static_cast<std::size_t>(n_replicas));
  for (std::size_t cp = 0; cp < n_cp; ++cp) {
    double worst = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      for (int r = 0; r < n_replicas; ++r)
        sample[static_cast<std::size_t>(r)] =
            radii[(static_cast<std::size_t>(r) * n_cp + cp) * n_blocks + b];
      double dof = static_cast<double>(target.block_dim(static_cast<Index>(b)));
      double ks = ks_statistic(sample, [&](double v) { return chi_square_cdf(dof, v); });
      worst = std::max(worst, ks);
      auto& row = ks_table.add_row();
      row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
      row.push_back(format_integer(checkpoints[cp]));
      row.push_back(format_integer(static_cast<std::int64_t>(b)));
      row.push_back(format_number(ks));
    }
    if (estimate < 0 && worst < config.epsilon) estimate = checkpoints[cp];
  }
  bool censored = estimate < 0;
  if (censored) estimate = config.horizon;
  report.set_value("mixing_estimate", estimate);
  report.set_value("mixing_estimate_censored", censored ? 1.0 : 0.0);
  if (config.mixing_pass_threshold) {
    report.add_flag("mixing_estimate_within", !censored && estimate <= *config.mixing_pass_threshold,
                    estimate, *config.mixing_pass_threshold,
                    censored ? "estimate censored at the horizon"
                             : "first checkpoint with max-block radial KS below epsilon");
  }

  if (config.monitor_shells) {
    double min_rate = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < target.num_blocks(); ++i) {
      double r = monitor_shell.r[static_cast<std::size_t>(i)];
      min_rate = std::min(min_rate, r * r / (8.0 * static_cast<double>(target.block_dim(i))));
    }
    auto& exits = report.table("shell_exits", {"seed", "step", "cumulative_exits", "bound"});
    for (std::size_t cp = 0; cp < n_cp; ++cp) {
      int step = checkpoints[cp];
      std::int64_t count = 0;
      for (int r = 0; r < n_replicas; ++r)
        if (exit_step[static_cast<std::size_t>(r)] <= step) ++count;
      double bound = 8.0 * static_cast<double>(step) * std::exp(-min_rate);
      auto& row = exits.add_row();
      row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
      row.push_back(format_integer(step));
      row.push_back(format_integer(count));
      row.push_back(format_number(std::min(1.0, bound) * n_replicas));
    }
  }

  if (record_uniformization) {
    double sum = 0.0;
    std::int64_t count = 0;
    for (int r = 0; r < n_replicas; ++r) {
      sum += unif_threshold_sum[static_cast<std::size_t>(r)];
      count += unif_count[static_cast<std::size_t>(r)];
    }
    double accept_rate = count > 0 ? sum / static_cast<double>(count) : 0.0;
    double rejection = 1.0 - accept_rate;
    double tail = std::numeric_limits<double>::infinity();
    double energy = 0.0;
    for (Index i = 0; i < target.num_blocks(); ++i) {
      auto b = static_cast<std::size_t>(i);
      double d = static_cast<double>(target.block_dim(i));
      double m = target.stiffness(i);
      tail = std::min(tail, monitor_shell.r[b] * monitor_shell.r[b] / (8.0 * d));
      energy = std::max(energy,
                        m * std::max(monitor_shell.alpha[b], monitor_shell.r[b]) +
                            hbar * hbar * m * m * d);
    }
    double bound = 8.0 * std::exp(-tail) + 2.0 * hbar * hbar * energy;
    report.set_value("uniformization_rejection_rate", rejection);
    report.set_value("uniformization_rejection_bound", bound);
    report.add_flag("uniformization_rejection_bounded", rejection <= bound, rejection, bound,
                    "frequency of the complement of {v in E} and the uniform-selection event");
  }

  report.wall_ms = timer.elapsed_ms();
  return report;
}

}  // namespace uturnlab::lab
