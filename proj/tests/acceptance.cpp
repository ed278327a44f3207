// Acceptance suite: runs every stated tolerance end to end and prints one
// pass/fail line per criterion.  Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "uturnlab/hmc.hpp"
#include "uturnlab/lab/experiments.hpp"
#include "uturnlab/lab/predictor.hpp"
#include "uturnlab/nuts.hpp"
#include "uturnlab/parallel.hpp"
#include "uturnlab/rng.hpp"
#include "uturnlab/stats.hpp"
#include "uturnlab/target.hpp"
#include "uturnlab/uturn.hpp"

using namespace uturnlab;

using Target = ScaleBlockTarget<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

int g_failures = 0;

class Criterion {
 public:
  Criterion(int index, std::string name)
      : index_(index), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

  void report(bool passed, const std::string& detail) {
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    std::printf("[%s] %2d. %s: %s  (%.1fs)\n", passed ? "PASS" : "FAIL", index_, name_.c_str(),
                detail.c_str(), elapsed.count());
    std::fflush(stdout);
    if (!passed) ++g_failures;
  }

 private:
  int index_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* pattern, ...) {
  va_list args;
  va_start(args, pattern);
  char buffer[512];
  std::vsnprintf(buffer, sizeof(buffer), pattern, args);
  va_end(args);
  return buffer;
}

lab::SamplerConfig nuts_sampler(double h, int k_max, FlowKind flow) {
  lab::SamplerConfig sampler;
  sampler.kind = lab::SamplerConfig::Kind::nuts;
  sampler.h = h;
  sampler.k_max = k_max;
  sampler.flow = flow;
  return sampler;
}

// 1. Empirical mean of v+.(x+-x-) matches the trace formula on a 20x20 grid.
void criterion_trace_mean() {
  Criterion crit(1, "trace-formula mean (canonical Gaussian d=100)");
  lab::ConcentrationConfig config;
  config.common.seed = 1001;
  config.targets.push_back(Target::isotropic(1.0, 100));
  config.flow = FlowKind::exact;
  config.t_max = 2.0 * kPi;
  config.grid_n = 20;
  config.n_draws = 20000;
  config.mean_cell_fraction = 0.95;
  auto report = lab::concentration_experiment(config);
  const auto* flag = report.find_flag("trace_mean_within_3se");
  crit.report(flag != nullptr && flag->passed,
              fmt("%.4f of grid cells within 3 SE (need >= 0.95)",
                  flag ? flag->observed : 0.0));
}

// 2. Deviation std grows like sqrt(d) across d = 10, 100, 1000.
void criterion_concentration_tightening() {
  Criterion crit(2, "concentration tightening across dimensions");
  lab::ConcentrationConfig config;
  config.common.seed = 1002;
  for (Index d : {10, 100, 1000}) config.targets.push_back(Target::isotropic(1.0, d));
  config.flow = FlowKind::exact;
  config.t_max = 2.0 * kPi;
  config.grid_n = 12;
  config.n_draws = 10000;
  config.std_ratio_tolerance = 0.30;
  auto report = lab::concentration_experiment(config);
  const auto* r01 = report.find_flag("std_ratio_0_1");
  const auto* r12 = report.find_flag("std_ratio_1_2");
  bool passed = r01 && r12 && r01->passed && r12->passed;
  crit.report(passed, fmt("std ratios %.3f and %.3f vs sqrt(10)=%.3f (+-30%%)",
                          r01 ? r01->observed : 0.0, r12 ? r12->observed : 0.0,
                          std::sqrt(10.0)));
}

// 3. Closed-form leapfrog vs stepwise velocity-Verlet, and shadow-energy drift.
void criterion_leapfrog_correctness() {
  Criterion crit(3, "leapfrog closed form and shadow-energy drift");
  RngStream rng(1003);
  double worst_state = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    double m1 = 0.1 + 3.0 * rng.uniform();
    double m2 = m1 + 5.0 * rng.uniform();
    Target target({{m1, 3}, {m2, 3}});
    double h = rng.uniform() / std::sqrt(m2);
    PhasePoint<double> p{rng.gaussian_vector<double>(6), rng.gaussian_vector<double>(6)};
    Index n = 1000;
    if (rng.coin()) n = -n;
    auto closed = leapfrog_flow(target, p, n, h);
    auto stepped = oracles::velocity_verlet(target, p, n, h);
    double scale = 1.0 + stepped.x.cwiseAbs().maxCoeff() + stepped.v.cwiseAbs().maxCoeff();
    worst_state = std::max(worst_state,
                           std::max((closed.x - stepped.x).cwiseAbs().maxCoeff(),
                                    (closed.v - stepped.v).cwiseAbs().maxCoeff()) /
                               scale);
  }

  double worst_drift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    double m = 0.2 + 4.0 * rng.uniform();
    Target target({{m, 5}});
    double h = rng.uniform() / std::sqrt(m);
    PhasePoint<double> p{rng.gaussian_vector<double>(5), rng.gaussian_vector<double>(5)};
    double e0 = modified_hamiltonian(target, p, h);
    auto end = leapfrog_flow(target, p, 10000, h);
    double drift = std::abs(modified_hamiltonian(target, end, h) - e0) / (1.0 + std::abs(e0));
    worst_drift = std::max(worst_drift, drift);
  }
  bool passed = worst_state < 1e-12 && worst_drift <= 1e-8;
  crit.report(passed, fmt("max state diff %.2e (<1e-12), max drift %.2e (<=1e-8)",
                          worst_state, worst_drift));
}

// 4. Orbit-selection uniformity in the isotropic prop regime.
void criterion_orbit_selection() {
  Criterion crit(4, "orbit-selection uniformity (isotropic d=1000)");
  lab::OrbitStatsConfig config;
  config.common.seed = 1004;
  config.target = Target::isotropic(1.0, 1000);
  config.sampler = nuts_sampler(0.0375, 10, FlowKind::exact);
  config.n_transitions = 10000;
  config.dominance_threshold = 0.99;
  config.placement_p_threshold = 0.001;
  config.emit_trace = false;
  auto report = lab::orbit_statistics_experiment(config);
  const auto* dom = report.find_flag("predicted_length_dominates");
  const auto* place = report.find_flag("placement_uniform");
  bool t_star_ok = std::abs(report.value("t_star") - 4.7625) < 1e-9 &&
                   report.value("k_star") == 7.0;
  bool passed = t_star_ok && dom && dom->passed && place && place->passed;
  crit.report(passed, fmt("t*=%.4f k*=%d, |I|=128 share %.4f (>=0.99), placement p=%.4f (>0.001)",
                          report.value("t_star"), int(report.value("k_star")),
                          dom ? dom->observed : 0.0, place ? place->observed : 0.0));
}

// 5. Exact-flow index selection is uniform within a fixed orbit.
void criterion_index_selection() {
  Criterion crit(5, "index-selection uniformity (exact flow)");
  auto target = Target::isotropic(1.0, 200);
  OrbitParams<double> params(0.05, 6, FlowKind::exact);
  NutsSampler<double> sampler(target, params);
  RngStream rng(1005);
  auto p = sample_phase_point(target, rng);
  OrbitTrace<double> trace;
  sampler.build_orbit(p, rng, trace);
  std::vector<double> counts(static_cast<std::size_t>(trace.orbit.length()), 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(sampler.select_index(trace, rng) - trace.orbit.i_min)] += 1.0;
  auto test = uniform_chi_square_test(counts);
  crit.report(test.p_value > 0.001,
              fmt("|I|=%lld, chi-square p=%.4f (>0.001) over 1e5 draws",
                  static_cast<long long>(trace.orbit.length()), test.p_value));
}

// 6. Accelerated-phase diagram: membership, boundary constant, finite-kappa boundary.
void criterion_phase_diagram() {
  Criterion crit(6, "accelerated-phase diagram");
  bool membership = true;
  for (double kappa : {1.0, 1.5, 2.0, 3.0, 3.9, 3.99}) {
    for (double ratio : {0.1, 1.0, 10.0, 100.0}) {
      membership = membership && lab::phase_membership(kappa, ratio).accelerated;
    }
  }
  double a = lab::phase_boundary_constant();
  bool constant_ok = a > 4.55 && a < 4.65;
  double worst_rel = 0.0;
  for (double kappa : {25.0, 100.0, 400.0}) {
    double boundary = lab::phase_boundary_ratio(kappa);
    double approx = std::sqrt(kappa) * std::sin(a / std::sqrt(kappa));
    worst_rel = std::max(worst_rel, std::abs(boundary - approx) / approx);
  }
  bool passed = membership && constant_ok && worst_rel < 0.05;
  crit.report(passed, fmt("kappa<4 all accelerated: %s, a=%.5f in (4.55,4.65), "
                          "boundary vs sqrt(k)sin(a/sqrt(k)) off by %.2f%% (<5%%)",
                          membership ? "yes" : "no", a, 100.0 * worst_rel));
}

// 7. Two-scale dichotomy in the selected orbit length.
void criterion_two_scale_dichotomy() {
  Criterion crit(7, "two-scale orbit-length dichotomy");
  lab::OrbitStatsConfig accel;
  accel.common.seed = 1007;
  accel.target = Target::two_scale(1.0, 2500.0, 2000, 2000);
  accel.sampler = nuts_sampler(0.026, 8, FlowKind::exact);
  accel.n_transitions = 2000;
  accel.dominance_threshold = 0.90;
  accel.emit_trace = false;
  auto accel_report = lab::orbit_statistics_experiment(accel);

  lab::OrbitStatsConfig slow = accel;
  slow.common.seed = 1008;
  slow.target = Target::two_scale(1.0, 2500.0, 200, 4000);
  slow.sampler = nuts_sampler(0.094 / 63.0, 8, FlowKind::exact);
  auto slow_report = lab::orbit_statistics_experiment(slow);

  bool accel_ok = std::abs(accel_report.value("t_star") - 3.302) < 1e-9 &&
                  accel_report.value("k_star") == 7.0 &&
                  accel_report.find_flag("predicted_length_dominates")->passed;
  bool slow_ok = std::abs(slow_report.value("t_star") - 0.094) < 1e-9 &&
                 slow_report.value("k_star") == 6.0 &&
                 slow_report.find_flag("predicted_length_dominates")->passed;
  crit.report(accel_ok && slow_ok,
              fmt("accelerated t*=%.3f |I|=128 share %.3f; non-accelerated t*=%.4f |I|=64 "
                  "share %.3f (both >= 0.90)",
                  accel_report.value("t_star"),
                  accel_report.find_flag("predicted_length_dominates")->observed,
                  slow_report.value("t_star"),
                  slow_report.find_flag("predicted_length_dominates")->observed));
}

// 8. Synchronous-coupling contraction against the exact rate.
void criterion_contraction() {
  Criterion crit(8, "coupled contraction against the exact rate");
  struct Case {
    Target target;
    double h;
    int k_star;
    const char* name;
  };
  std::vector<Case> cases;
  cases.push_back({Target::isotropic(1.0, 50), kPi / 2.0, 1, "isotropic rho=1/4"});
  cases.push_back({Target::two_scale(1.0, 2500.0, 2000, 2000), 0.026, 7, "accelerated"});
  cases.push_back({Target::two_scale(1.0, 2500.0, 200, 4000), 0.094 / 63.0, 6, "non-accelerated"});
  bool all = true;
  std::string detail;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    lab::ContractionConfig config;
    config.common.seed = 1010 + static_cast<std::uint64_t>(i);
    config.target = cases[i].target;
    config.law = IntegrationTimeLaw<double>::triangular(cases[i].h, cases[i].k_star);
    config.flow = FlowKind::exact;
    config.flow_step = cases[i].h;
    config.n_pairs = 10000;
    config.n_steps = 1;
    auto report = lab::contraction_experiment(config);
    bool ok = report.all_passed();
    if (i == 0) ok = ok && std::abs(report.value("exact_contraction_rate") - 0.25) < 1e-12;
    all = all && ok;
    if (!detail.empty()) detail += ", ";
    detail += fmt("%s: factor %.4f vs 1-rho %.4f", cases[i].name,
                  report.value("mean_step1_factor"),
                  1.0 - report.value("exact_contraction_rate"));
  }
  crit.report(all, detail);
}

// 9. Mixing dichotomy with the radial-KS proxy.
void criterion_mixing_dichotomy() {
  Criterion crit(9, "mixing dichotomy (radial-KS proxy, 200 replicas)");
  lab::MixingConfig accel;
  accel.common.seed = 1009;
  accel.target = Target::two_scale(1.0, 2500.0, 2000, 2000);
  accel.sampler = nuts_sampler(0.026, 8, FlowKind::exact);
  accel.n_replicas = 200;
  accel.horizon = 40;
  accel.start = lab::StartKind::zero;
  accel.epsilon = 0.05;
  auto accel_report = lab::mixing_experiment(accel);
  double accel_estimate = accel_report.value("mixing_estimate");
  bool accel_ok = accel_report.value("mixing_estimate_censored") == 0.0 && accel_estimate <= 30.0;

  lab::MixingConfig slow = accel;
  slow.common.seed = 1019;
  slow.target = Target::two_scale(1.0, 2500.0, 200, 4000);
  slow.sampler = nuts_sampler(0.094 / 63.0, 8, FlowKind::exact);
  slow.horizon = 200;
  std::vector<int> cps;
  for (int c = 5; c <= 200; c += 5) cps.push_back(c);
  slow.checkpoints = cps;
  auto slow_report = lab::mixing_experiment(slow);
  double slow_estimate = slow_report.value("mixing_estimate");

  bool passed = accel_ok && slow_estimate >= 5.0 * accel_estimate;
  crit.report(passed, fmt("accelerated estimate %d (<=30), non-accelerated %d%s (>= 5x)",
                          int(accel_estimate), int(slow_estimate),
                          slow_report.value("mixing_estimate_censored") == 1.0
                              ? " (censored at horizon)"
                              : ""));
}

// 10. Stationarity of exact-flow NUTS and HMC(tau*) under the radial KS proxy.
void criterion_stationarity() {
  Criterion crit(10, "stationarity over 50 transitions (2000 replicas)");
  auto run = [&](lab::SamplerConfig sampler, std::uint64_t seed) {
    lab::MixingConfig config;
    config.common.seed = seed;
    config.target = Target::isotropic(1.0, 1000);
    config.sampler = sampler;
    config.n_replicas = 2000;
    config.horizon = 50;
    config.checkpoints = {10, 25, 50};
    config.start = lab::StartKind::stationary;
    config.epsilon = 0.05;
    config.monitor_shells = false;
    auto report = lab::mixing_experiment(config);
    double worst = 0.0;
    for (const auto& row : report.find_table("radial_ks")->rows)
      worst = std::max(worst, std::stod(row.back()));
    return worst;
  };

  double nuts_worst = run(nuts_sampler(0.0375, 10, FlowKind::exact), 1020);

  lab::SamplerConfig hmc;
  hmc.kind = lab::SamplerConfig::Kind::hmc;
  hmc.h = 0.0375;
  hmc.flow = FlowKind::exact;
  hmc.law = IntegrationTimeLaw<double>::triangular(0.0375, 7);
  double hmc_worst = run(hmc, 1021);

  bool passed = nuts_worst < 0.05 && hmc_worst < 0.05;
  crit.report(passed, fmt("max radial KS: nuts %.4f, hmc(tau*) %.4f (both < 0.05)",
                          nuts_worst, hmc_worst));
}

// 11. Maximal-coupling meeting probability 2 Phi(-|s|/2).
void criterion_meeting_probability() {
  Criterion crit(11, "maximal-coupling meeting probability");
  RngStream rng(1011);
  const Index d = 8;
  bool all = true;
  double worst_z = 0.0;
  for (double s_norm : {0.1, 0.5, 1.0, 2.0, 4.0}) {
    Vec<double> shift = Vec<double>::Zero(d);
    shift[0] = s_norm;
    const int n = 100000;
    int met = 0;
    for (int i = 0; i < n; ++i) {
      Vec<double> v = rng.gaussian_vector<double>(d);
      if (maximal_shift_meet(v, shift, rng).met) ++met;
    }
    double expected = 2.0 * normal_cdf(-s_norm / 2.0);
    double se = std::sqrt(expected * (1.0 - expected) / n);
    double z = std::abs(double(met) / n - expected) / se;
    worst_z = std::max(worst_z, z);
    all = all && z <= 3.0;
  }
  crit.report(all, fmt("worst |z| = %.2f over |s| in {0.1,0.5,1,2,4} (<= 3)", worst_z));
}

// 12. Uniformization-event frequency against the two-term bound (leapfrog NUTS).
void criterion_uniformization() {
  Criterion crit(12, "uniformization-event frequency (leapfrog NUTS)");
  auto target = Target::two_scale(1.0, 2500.0, 200, 4000);
  double t_c = lab::continuous_critical_time(target);
  double d = static_cast<double>(target.dim());
  double h = 0.5 / std::sqrt(target.max_stiffness()) / std::pow(d, 0.25) *
             std::min(std::sqrt(target.min_stiffness()) * t_c, 1.0) *
             std::min(std::sqrt(target.min_stiffness()) * t_c, 1.0);

  lab::MixingConfig config;
  config.common.seed = 1012;
  config.target = target;
  config.sampler = nuts_sampler(h, 15, FlowKind::leapfrog);
  config.n_replicas = 100;
  config.horizon = 10;
  config.checkpoints = {10};
  config.start = lab::StartKind::stationary;
  config.shell_scale = 6.0;
  config.monitor_shells = false;
  auto report = lab::mixing_experiment(config);
  const auto* flag = report.find_flag("uniformization_rejection_bounded");
  crit.report(flag != nullptr && flag->passed,
              fmt("h=%.3e, rejection rate %.2e <= bound %.4f",
                  h, report.value("uniformization_rejection_rate"),
                  report.value("uniformization_rejection_bound")));
}

}  // namespace

int main() {
  std::printf("uturnlab acceptance suite\n");
  criterion_trace_mean();
  criterion_concentration_tightening();
  criterion_leapfrog_correctness();
  criterion_orbit_selection();
  criterion_index_selection();
  criterion_phase_diagram();
  criterion_two_scale_dichotomy();
  criterion_contraction();
  criterion_mixing_dichotomy();
  criterion_stationarity();
  criterion_meeting_probability();
  criterion_uniformization();
  std::printf("%d of 12 criteria passed\n", 12 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
