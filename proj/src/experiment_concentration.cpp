#include <algorithm>
#include <cmath>
#include <vector>

#include "experiment_util.hpp"
#include "uturnlab/lab/experiments.hpp"
#include "uturnlab/parallel.hpp"
#include "uturnlab/uturn.hpp"

namespace uturnlab::lab {

namespace {

struct Cell {
  double t_minus;
  double t_plus;
};

}  // namespace

ExperimentReport concentration_experiment(const ConcentrationConfig& config) {
  if (config.targets.empty())
    throw std::invalid_argument("concentration: at least one target required");
  if (config.grid_n < 2 || config.n_draws < 100)
    throw std::invalid_argument("concentration: grid_n >= 2 and n_draws >= 100 required");

  WallTimer timer;
  ExperimentReport report;
  report.experiment = "concentration";
  report.seed = config.common.seed;

  // grid times, snapped to the leapfrog grid when applicable
  std::vector<double> times(static_cast<std::size_t>(config.grid_n));
  for (int i = 0; i < config.grid_n; ++i) {
    double t = config.t_max * static_cast<double>(i) / static_cast<double>(config.grid_n - 1);
    if (config.flow == FlowKind::leapfrog) t = std::round(t / config.h) * config.h;
    times[static_cast<std::size_t>(i)] = t;
  }
  std::vector<Cell> cells;
  for (int a = 0; a < config.grid_n; ++a)
    for (int b = a; b < config.grid_n; ++b)
      cells.push_back({times[static_cast<std::size_t>(a)], times[static_cast<std::size_t>(b)]});
  const auto n_cells = static_cast<std::int64_t>(cells.size());
  const std::int64_t n_draws = config.n_draws;

  std::vector<double> pooled_stds;

  for (std::size_t ti = 0; ti < config.targets.size(); ++ti) {
    const auto& target = config.targets[ti];
    auto flow = config.flow == FlowKind::leapfrog ? FlowVariant<double>::leapfrog(config.h)
                                                  : FlowVariant<double>::exact(config.h);
    UniformTermSpec<double> spec(target, flow.hbar());

    std::vector<double> dots(static_cast<std::size_t>(n_draws * n_cells));
    std::vector<double> mins(static_cast<std::size_t>(n_draws * n_cells));

    std::int64_t n_chunks = chunk_count(n_draws);
    std::int64_t chunk = (n_draws + n_chunks - 1) / n_chunks;
    parallel_tasks(n_chunks, config.common.threads, [&](std::int64_t task) {
      std::int64_t lo = task * chunk;
      std::int64_t hi = std::min(n_draws, lo + chunk);
      for (std::int64_t draw = lo; draw < hi; ++draw) {
        RngStream rng = RngStream::substream(
            config.common.seed, static_cast<std::uint64_t>(ti) * 0x10000000 +
                                    static_cast<std::uint64_t>(draw));
        auto p = sample_phase_point(target, rng);
        DiagnosticEvaluator<double> eval(target, flow, p);
        for (std::int64_t c = 0; c < n_cells; ++c) {
          const auto& cell = cells[static_cast<std::size_t>(c)];
          auto [dot_minus, dot_plus] = eval.endpoint_dots(cell.t_minus, cell.t_plus);
          dots[static_cast<std::size_t>(draw * n_cells + c)] = dot_plus;
          mins[static_cast<std::size_t>(draw * n_cells + c)] = std::min(dot_minus, dot_plus);
        }
      }
    });

    std::string suffix = config.targets.size() > 1 ? "_" + std::to_string(ti) : "";
    auto& table = report.table(
        "cells" + suffix,
        {"seed", "t_minus", "t_plus", "mean_dot", "se_dot", "trace_formula", "within_3se",
         "std_f", "q05", "q25", "q50", "q75", "q95"});

    std::int64_t cells_within = 0;
    double pooled_var = 0.0;
    std::int64_t pooled_cells = 0;
    std::vector<double> pooled_devs;
    pooled_devs.reserve(static_cast<std::size_t>(n_draws) * 8);
    std::vector<double> cell_devs(static_cast<std::size_t>(n_draws));

    for (std::int64_t c = 0; c < n_cells; ++c) {
      const auto& cell = cells[static_cast<std::size_t>(c)];
      double f_unif = uniform_term(spec, cell.t_plus - cell.t_minus);
      RunningMoments dot_m, dev_m;
      for (std::int64_t draw = 0; draw < n_draws; ++draw) {
        double dot = dots[static_cast<std::size_t>(draw * n_cells + c)];
        double dev = mins[static_cast<std::size_t>(draw * n_cells + c)] - f_unif;
        dot_m.add(dot);
        dev_m.add(dev);
        cell_devs[static_cast<std::size_t>(draw)] = dev;
      }
      bool within = std::abs(dot_m.mean - f_unif) <= 3.0 * dot_m.standard_error() + 1e-9;
      if (within) ++cells_within;
      if (cell.t_plus > cell.t_minus) {
        pooled_var += dev_m.variance();
        ++pooled_cells;
        for (double d : cell_devs) pooled_devs.push_back(std::abs(d));
      }
      std::sort(cell_devs.begin(), cell_devs.end());
      auto& row = table.add_row();
      row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
      row.push_back(format_number(cell.t_minus));
      row.push_back(format_number(cell.t_plus));
      row.push_back(format_number(dot_m.mean));
      row.push_back(format_number(dot_m.standard_error()));
      row.push_back(format_number(f_unif));
      row.push_back(within ? "1" : "0");
      row.push_back(format_number(dev_m.stddev()));
      for (double q : {0.05, 0.25, 0.50, 0.75, 0.95})
        row.push_back(format_number(sorted_quantile(cell_devs, q)));
    }

    double fraction = static_cast<double>(cells_within) / static_cast<double>(n_cells);
    report.add_flag("trace_mean_within_3se" + suffix, fraction >= config.mean_cell_fraction,
                    fraction, config.mean_cell_fraction,
                    "fraction of grid cells where the empirical mean of v+.(x+-x-) matches "
                    "tr(sin(C^{-1/2} dt) C^{1/2})");

    double pooled_std = pooled_cells > 0 ? std::sqrt(pooled_var / double(pooled_cells)) : 0.0;
    pooled_stds.push_back(pooled_std);
    report.set_value("pooled_std" + suffix, pooled_std);

    // Bernstein-type tail fit: regress -log exceedance on min(r^2/trC, r/||C^{1/2}||)
    std::sort(pooled_devs.begin(), pooled_devs.end());
    double tr_c = target.trace_cov();
    double sigma_max = 1.0 / std::sqrt(target.min_stiffness());
    double num = 0.0, den = 0.0;
    auto& tail = report.table("tail_fit" + suffix,
                              {"seed", "exceedance", "r", "bernstein_scale"});
    for (double p : {0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002}) {
      double r = sorted_quantile(pooled_devs, 1.0 - p);
      double x = std::min(r * r / tr_c, r / sigma_max);
      double y = -std::log(p);
      num += x * y;
      den += x * x;
      auto& row = tail.add_row();
      row.push_back(format_integer(static_cast<std::int64_t>(config.common.seed)));
      row.push_back(format_number(p));
      row.push_back(format_number(r));
      row.push_back(format_number(x));
    }
    report.set_value("tail_constant" + suffix, den > 0.0 ? num / den : 0.0);

    double strength = target.trace_sqrt_cov() / std::sqrt(target.trace_cov());
    report.set_value("uniform_to_deviation_ratio" + suffix, strength);
    report.set_value("concentration_strong" + suffix,
                     strength >= config.strong_concentration_ratio ? 1.0 : 0.0);
  }

  // std growth between consecutive targets against sqrt(trace ratio)
  for (std::size_t i = 0; i + 1 < config.targets.size(); ++i) {
    double predicted = std::sqrt(config.targets[i + 1].trace_cov() /
                                 config.targets[i].trace_cov());
    double measured = pooled_stds[i + 1] / pooled_stds[i];
    double rel = measured / predicted;
    report.add_flag(
        "std_ratio_" + std::to_string(i) + "_" + std::to_string(i + 1),
        rel >= 1.0 - config.std_ratio_tolerance && rel <= 1.0 + config.std_ratio_tolerance,
        measured, predicted, "pooled deviation std ratio against square-root trace growth");
  }

  report.wall_ms = timer.elapsed_ms();
  return report;
}

}  // namespace uturnlab::lab
