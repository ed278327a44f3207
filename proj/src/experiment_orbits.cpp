#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "experiment_util.hpp"
#include "uturnlab/lab/experiments.hpp"
#include "uturnlab/lab/predictor.hpp"
#include "uturnlab/parallel.hpp"
#include "uturnlab/uturn.hpp"

namespace uturnlab::lab {

ExperimentReport orbit_statistics_experiment(const OrbitStatsConfig& config) {
  if (config.sampler.kind != SamplerConfig::Kind::nuts)
    throw std::invalid_argument("orbits: sampler must be nuts");
  if (config.n_transitions < 1)
    throw std::invalid_argument("orbits: n_transitions must be >= 1");

  WallTimer timer;
  ExperimentReport report;
  report.experiment = "orbits";
  report.seed = config.common.seed;

  const auto& target = config.target;
  auto params = config.sampler.orbit_params();
  auto flow = params.flow();
  const std::int64_t n = config.n_transitions;
  const int k_max = params.k_max;
  {
    // surface kernel construction errors before the parallel region
    NutsSampler<double> probe(target, params);
  }

  std::vector<TransitionRecord<double>> records(static_cast<std::size_t>(n));
  std::vector<RunningMoments> dev_by_k(
      static_cast<std::size_t>(chunk_count(n) * (k_max + 1)));

  std::int64_t n_chunks = chunk_count(n);
  std::int64_t chunk = (n + n_chunks - 1) / n_chunks;
  parallel_tasks(n_chunks, config.common.threads, [&](std::int64_t task) {
    NutsSampler<double> sampler(target, params);
    OrbitTrace<double> trace;
    UniformTermSpec<double> spec(target, params.hbar());
    std::int64_t lo = task * chunk;
    std::int64_t hi = std::min(n, lo + chunk);
    for (std::int64_t i = lo; i < hi; ++i) {
      RngStream rng = RngStream::substream(config.common.seed, static_cast<std::uint64_t>(i));
      auto p = sample_phase_point(target, rng);

      // deviation of the diagnostic from the uniform term at every menu length
      DiagnosticEvaluator<double> eval(target, flow, p);
      for (int k = 1; k <= k_max; ++k) {
        double t = params.h * static_cast<double>((Index(1) << k) - 1);
        double dev = eval.diagnostic(0.0, t) - uniform_term(spec, t);
        dev_by_k[static_cast<std::size_t>(task * (k_max + 1) + k)].add(dev);
      }

      sampler.build_orbit(p, rng, trace);
      Index iota = sampler.select_index(trace, rng);
      auto& rec = records[static_cast<std::size_t>(i)];
      rec.orbit_length = trace.orbit.length();
      rec.min_index = trace.orbit.i_min;
      rec.stop = trace.stop;
      rec.iota = iota;
      rec.delta_h_iota = trace.delta_h_at(iota);
    }
  });

  // merge per-chunk deviation moments in task order
  std::vector<RunningMoments> dev(static_cast<std::size_t>(k_max + 1));
  for (std::int64_t task = 0; task < n_chunks; ++task)
    for (int k = 1; k <= k_max; ++k)
      dev[static_cast<std::size_t>(k)].merge(
          dev_by_k[static_cast<std::size_t>(task * (k_max + 1) + k)]);

  auto prediction = critical_orbit_length(target, params.h, k_max, params.hbar());
  report.set_value("t_star", prediction.t_star);
  report.set_value("k_star", prediction.k_star);
  report.set_value("capped", prediction.capped ? 1.0 : 0.0);

  // orbit length histogram
  std::map<Index, std::int64_t> hist;
  std::map<int, std::int64_t> stop_counts;
  for (const auto& rec : records) {
    ++hist[rec.orbit_length];
    ++stop_counts[static_cast<int>(rec.stop)];
  }
  auto& hist_table =
      report.table("orbit_lengths", {"seed", "orbit_len", "physical_length", "count", "frequency"});
  Index modal_len = 0;
  std::int64_t modal_count = 0;
  for (const auto& [len, count] : hist) {
    if (count > modal_count) {
      modal_count = count;
      modal_len = len;
    }
    auto& row = hist_table.add_row();
    row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
    row.push_back(format_integer(len));
    row.push_back(format_number(params.h * static_cast<double>(len - 1)));
    row.push_back(format_integer(count));
    row.push_back(format_number(static_cast<double>(count) / static_cast<double>(n)));
  }

  auto& stops = report.table("stop_reasons", {"seed", "stop_reason", "count"});
  for (const auto& [reason, count] : stop_counts) {
    auto& row = stops.add_row();
    row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
    row.push_back(to_string(static_cast<StopReason>(reason)));
    row.push_back(format_integer(count));
  }

  Index predicted_len = Index(1) << prediction.k_star;
  double dominance = 0.0;
  if (auto it = hist.find(predicted_len); it != hist.end())
    dominance = static_cast<double>(it->second) / static_cast<double>(n);
  report.add_flag("predicted_length_dominates", dominance >= config.dominance_threshold,
                  dominance, config.dominance_threshold,
                  "fraction of transitions selecting orbit length 2^k*");

  // placement uniformity conditioned on the predicted length
  if (!prediction.capped && predicted_len >= 2) {
    std::vector<double> placements(static_cast<std::size_t>(predicted_len), 0.0);
    for (const auto& rec : records) {
      if (rec.orbit_length != predicted_len) continue;
      placements[static_cast<std::size_t>(-rec.min_index)] += 1.0;
    }
    auto test = uniform_chi_square_test(placements);
    report.set_value("placement_chi2", test.statistic);
    report.add_flag("placement_uniform", test.p_value > config.placement_p_threshold,
                    test.p_value, config.placement_p_threshold,
                    "chi-square p-value over the placements of index 0 in the orbit");
  }

  // selection condition: menu values against theoretical and empirical bands
  auto shell = ShellSpec<double>::scaled(target, config.shell_scale);
  double delta_theory = deviation_bound(target, shell, params.hbar());
  UniformTermSpec<double> spec(target, params.hbar());
  auto& cond = report.table("selection_condition",
                            {"seed", "k", "t", "f_unif", "delta_theory", "dev_std",
                             "delta_empirical", "offender_theory", "offender_empirical"});
  bool ok_theory = true, ok_empirical = true;
  for (int k = 1; k <= k_max; ++k) {
    double t = params.h * static_cast<double>((Index(1) << k) - 1);
    double f = uniform_term(spec, t);
    double dev_std = dev[static_cast<std::size_t>(k)].stddev();
    double delta_emp = config.empirical_band_factor * dev_std;
    bool bad_theory = f >= -delta_theory && f < delta_theory;
    bool bad_emp = f >= -delta_emp && f < delta_emp;
    ok_theory = ok_theory && !bad_theory;
    ok_empirical = ok_empirical && !bad_emp;
    auto& row = cond.add_row();
    row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
    row.push_back(format_integer(k));
    row.push_back(format_number(t));
    row.push_back(format_number(f));
    row.push_back(format_number(delta_theory));
    row.push_back(format_number(dev_std));
    row.push_back(format_number(delta_emp));
    row.push_back(bad_theory ? "1" : "0");
    row.push_back(bad_emp ? "1" : "0");
  }
  report.set_value("selection_condition_theory_ok", ok_theory ? 1.0 : 0.0);
  report.set_value("selection_condition_empirical_ok", ok_empirical ? 1.0 : 0.0);

  if (config.emit_trace) {
    auto& trace_table =
        report.table("orbit_trace", {"seed", "transition", "orbit_len", "min_index",
                                     "stop_reason", "iota", "delta_h_iota"});
    for (std::int64_t i = 0; i < n; ++i) {
      const auto& rec = records[static_cast<std::size_t>(i)];
      auto& row = trace_table.add_row();
      row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
      row.push_back(format_integer(i));
      row.push_back(format_integer(rec.orbit_length));
      row.push_back(format_integer(rec.min_index));
      row.push_back(to_string(rec.stop));
      row.push_back(format_integer(rec.iota));
      row.push_back(format_number(rec.delta_h_iota));
    }
  }

  report.wall_ms = timer.elapsed_ms();
  return report;
}

}  // namespace uturnlab::lab
