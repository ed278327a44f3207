#include <cmath>
#include <vector>

#include <doctest.h>

#include "uturnlab/hmc.hpp"
#include "uturnlab/nuts.hpp"
#include "uturnlab/rng.hpp"
#include "uturnlab/stats.hpp"
#include "uturnlab/target.hpp"

using namespace uturnlab;

using Target = ScaleBlockTarget<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("triangular weights: values, support, exact normalization, symmetry") {
  auto w0 = triangular_weights(0.5, 0);
  REQUIRE(w0.size() == 1);
  CHECK(w0[0].first == 0);
  CHECK(w0[0].second == 1.0);

  auto w1 = triangular_weights(0.5, 1);
  REQUIRE(w1.size() == 3);
  CHECK(w1[0] == std::pair<Index, double>{-1, 0.25});
  CHECK(w1[1] == std::pair<Index, double>{0, 0.5});
  CHECK(w1[2] == std::pair<Index, double>{1, 0.25});

  auto w3 = triangular_weights(0.1, 3);
  CHECK(w3.size() == 15);

  for (int k = 0; k <= 12; ++k) {
    auto w = triangular_weights(1.0, k);
    double sum = 0.0;
    for (auto& [j, wj] : w) sum += wj;
    CHECK(sum == 1.0);  // dyadic rationals add exactly
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i].first == -w[w.size() - 1 - i].first);
      CHECK(w[i].second == w[w.size() - 1 - i].second);
    }
  }
}

TEST_CASE("law and flow compatibility") {
  auto lf = FlowVariant<double>::leapfrog(0.1);
  auto law_exp = IntegrationTimeLaw<double>::exponential(2.0);
  CHECK_THROWS_AS(law_exp.check_compatible(lf), std::invalid_argument);

  auto off_grid = IntegrationTimeLaw<double>::point(0.15);
  CHECK_THROWS_AS(off_grid.check_compatible(lf), std::invalid_argument);
  IntegrationTimeLaw<double>::point(0.3).check_compatible(lf);

  auto mismatched = IntegrationTimeLaw<double>::triangular(0.2, 3);
  CHECK_THROWS_AS(mismatched.check_compatible(lf), std::invalid_argument);
  IntegrationTimeLaw<double>::triangular(0.1, 3).check_compatible(lf);
  law_exp.check_compatible(FlowVariant<double>::exact(0.1));
}

TEST_CASE("point law at zero keeps the state") {
  auto target = Target::two_scale(1.0, 9.0, 3, 3);
  auto law = IntegrationTimeLaw<double>::point(0.0);
  RngStream rng(1);
  Vec<double> x = rng.gaussian_vector<double>(6);
  Vec<double> next = hmc_transition(target, x, law, FlowVariant<double>::exact(0.1), rng);
  CHECK((next - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hmc preserves the target for exact flow (radial smoke test)") {
  auto target = Target::isotropic(1.0, 100);
  auto law = IntegrationTimeLaw<double>::triangular(0.5, 3);
  auto flow = FlowVariant<double>::exact(0.5);
  const int replicas = 400;
  std::vector<double> radial(replicas);
  for (int r = 0; r < replicas; ++r) {
    RngStream rng = RngStream::substream(99, static_cast<std::uint64_t>(r));
    Vec<double> x = sample_phase_point(target, rng).x;
    for (int step = 0; step < 10; ++step) x = hmc_transition(target, x, law, flow, rng);
    radial[static_cast<std::size_t>(r)] = x.squaredNorm();
  }
  double ks = ks_statistic(radial, [&](double v) { return chi_square_cdf(100.0, v); });
  CHECK(ks_pvalue(replicas, ks) > 0.001);
}

TEST_CASE("nuts with exact flow matches hmc with the triangular law (two-sample KS)") {
  // Prop regime: orbit selection concentrates on k* = 7 at this step size.
  auto target = Target::isotropic(1.0, 1000);
  OrbitParams<double> params(0.0375, 10, FlowKind::exact);
  auto law = IntegrationTimeLaw<double>::triangular(0.0375, 7);
  auto flow = FlowVariant<double>::exact(0.0375);

  RngStream rng(2);
  Vec<double> x0 = sample_phase_point(target, rng).x;
  const int n = 10000;
  std::vector<double> nuts_proj(n), hmc_proj(n), nuts_rad(n), hmc_rad(n);
  NutsSampler<double> sampler(target, params);
  for (int i = 0; i < n; ++i) {
    Vec<double> x = x0;
    sampler.step(x, rng);
    nuts_proj[static_cast<std::size_t>(i)] = x[0];
    nuts_rad[static_cast<std::size_t>(i)] = x.squaredNorm();
    Vec<double> y = hmc_transition(target, x0, law, flow, rng);
    hmc_proj[static_cast<std::size_t>(i)] = y[0];
    hmc_rad[static_cast<std::size_t>(i)] = y.squaredNorm();
  }
  CHECK(two_sample_ks(nuts_proj, hmc_proj).p_value > 0.001);
  CHECK(two_sample_ks(nuts_rad, hmc_rad).p_value > 0.001);
}

TEST_CASE("exact contraction rate closed forms and summation oracle") {
  auto iso = Target::isotropic(1.0, 10);
  auto degenerate = IntegrationTimeLaw<double>::triangular(0.3, 0);
  CHECK(exact_contraction_rate(iso, degenerate, 0.0) == 0.0);

  auto quarter = IntegrationTimeLaw<double>::triangular(kPi / 2.0, 1);
  CHECK(exact_contraction_rate(iso, quarter, 0.0) == doctest::Approx(0.25).epsilon(1e-14));

  auto ts = Target::two_scale(1.0, 2500.0, 200, 4000);
  auto law = IntegrationTimeLaw<double>::triangular(0.0014921, 6);
  double hbar = 0.0014921;
  double fast = exact_contraction_rate(ts, law, hbar);
  // independent re-summation in long double
  long double worst = 1e30L;
  for (double m : {1.0, 2500.0}) {
    long double beta = std::acos(1.0L - (long double)(hbar * hbar * m) / 2.0L) /
                       std::sqrt((long double)(hbar * hbar * m));
    long double omega = beta * std::sqrt((long double)m) * (long double)0.0014921;
    long double acc = 0.0L;
    for (Index j = -63; j <= 63; ++j) {
      long double w = (long double)(64 - std::abs(j)) / 4096.0L;
      long double s = std::sin(omega * (long double)j);
      acc += w * s * s;
    }
    worst = std::min(worst, acc / 2.0L);
  }
  CHECK(fast == doctest::Approx(static_cast<double>(worst)).epsilon(1e-12));
}

TEST_CASE("synchronous coupling contracts per coordinate by the cosine factor") {
  auto iso = Target::isotropic(1.0, 1);
  auto zero_law = IntegrationTimeLaw<double>::point(0.0);
  RngStream rng(3);
  Vec<double> x(1), y(1);
  x << 2.0;
  y << -1.0;
  auto [a, b] = coupled_hmc_step(iso, x, y, zero_law, FlowVariant<double>::exact(0.1), rng);
  CHECK((a - b)[0] == doctest::Approx(3.0).epsilon(1e-14));

  auto quarter_turn = IntegrationTimeLaw<double>::point(kPi / 2.0);
  auto [c, d] = coupled_hmc_step(iso, x, y, quarter_turn, FlowVariant<double>::exact(0.1), rng);
  CHECK(std::abs((c - d)[0]) < 1e-12);
}

TEST_CASE("mean coupled contraction is bounded by one minus the exact rate") {
  auto target = Target::isotropic(1.0, 20);
  auto law = IntegrationTimeLaw<double>::triangular(kPi / 2.0, 1);
  auto flow = FlowVariant<double>::exact(kPi / 2.0);
  double rho = exact_contraction_rate(target, law, 0.0);
  REQUIRE(rho == doctest::Approx(0.25));

  RngStream rng(4);
  Vec<double> x = sample_phase_point(target, rng).x;
  Vec<double> y = sample_phase_point(target, rng).x;
  double d0 = two_scale_norm(target, (x - y).eval());
  RunningMoments factor;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto [a, b] = coupled_hmc_step(target, x, y, law, flow, rng);
    factor.add(two_scale_norm(target, (a - b).eval()) / d0);
  }
  CHECK(factor.mean <= 1.0 - rho + 3.0 * factor.standard_error());
}

TEST_CASE("coupled contraction also holds for the leapfrog flow") {
  auto target = Target::two_scale(1.0, 25.0, 15, 15);
  double h = 0.15;
  auto law = IntegrationTimeLaw<double>::triangular(h, 3);
  auto flow = FlowVariant<double>::leapfrog(h);
  double rho = exact_contraction_rate(target, law, h);
  CHECK(rho > 0.0);

  RngStream rng(41);
  Vec<double> x = sample_phase_point(target, rng).x;
  Vec<double> y = sample_phase_point(target, rng).x;
  double d0 = two_scale_norm(target, (x - y).eval());
  RunningMoments factor;
  for (int i = 0; i < 20000; ++i) {
    auto [a, b] = coupled_hmc_step(target, x, y, law, flow, rng);
    factor.add(two_scale_norm(target, (a - b).eval()) / d0);
  }
  CHECK(factor.mean <= 1.0 - rho + 3.0 * factor.standard_error());
}

TEST_CASE("exponential-law hmc with exact flow preserves the target") {
  auto target = Target::isotropic(1.0, 100);
  auto law = IntegrationTimeLaw<double>::exponential(1.0);
  auto flow = FlowVariant<double>::exact(0.1);
  const int replicas = 400;
  std::vector<double> radial(replicas);
  for (int r = 0; r < replicas; ++r) {
    RngStream rng = RngStream::substream(123, static_cast<std::uint64_t>(r));
    Vec<double> x = sample_phase_point(target, rng).x;
    for (int step = 0; step < 10; ++step) x = hmc_transition(target, x, law, flow, rng);
    radial[static_cast<std::size_t>(r)] = x.squaredNorm();
  }
  double ks = ks_statistic(radial, [&](double v) { return chi_square_cdf(100.0, v); });
  CHECK(ks_pvalue(replicas, ks) > 0.001);
}

TEST_CASE("maximal shift coupling: marginals and meeting frequency") {
  RngStream rng(5);
  const Index d = 4;

  Vec<double> zero_shift = Vec<double>::Zero(d);
  Vec<double> v = rng.gaussian_vector<double>(d);
  auto same = maximal_shift_meet(v, zero_shift, rng);
  CHECK(same.met);
  CHECK((same.v_tilde - v).cwiseAbs().maxCoeff() == 0.0);

  Vec<double> shift = Vec<double>::Zero(d);
  shift[0] = 2.0;
  const int n = 100000;
  int met = 0;
  RunningMoments mean0, mean1, var0;
  for (int i = 0; i < n; ++i) {
    Vec<double> draw = rng.gaussian_vector<double>(d);
    auto coupled = maximal_shift_meet(draw, shift, rng);
    if (coupled.met) {
      ++met;
      CHECK((coupled.v_tilde - (draw + shift)).cwiseAbs().maxCoeff() == 0.0);
    }
    mean0.add(coupled.v_tilde[0]);
    mean1.add(coupled.v_tilde[1]);
    var0.add(coupled.v_tilde[0] * coupled.v_tilde[0]);
  }
  double expected = 2.0 * normal_cdf(-1.0);
  double se = std::sqrt(expected * (1.0 - expected) / n);
  CHECK(std::abs(double(met) / n - expected) <= 3.0 * se);
  CHECK(std::abs(mean0.mean) <= 3.0 * mean0.standard_error());
  CHECK(std::abs(mean1.mean) <= 3.0 * mean1.standard_error());
  CHECK(std::abs(var0.mean - 1.0) <= 3.0 * var0.standard_error());
}

TEST_CASE("regularization constant: degenerate cases and summation oracle") {
  auto iso = Target::isotropic(1.0, 4);
  auto law = IntegrationTimeLaw<double>::triangular(0.5, 3);

  IntervalSet<double> everything{{-1e9, 1e9}};
  auto all_excluded = exact_regularization_constant(iso, law, 0.0, everything);
  CHECK(all_excluded.constant == 0.0);
  CHECK(all_excluded.excluded_mass == 1.0);
  CHECK(all_excluded.finite);

  auto nothing = exact_regularization_constant(iso, law, 0.0, IntervalSet<double>{});
  CHECK_FALSE(nothing.finite);  // cot^2 pole at t = 0

  auto bands = cot_pole_bands(iso, law, 0.0, 0.3);
  auto banded = exact_regularization_constant(iso, law, 0.0, bands);
  CHECK(banded.finite);
  CHECK(banded.excluded_mass > 0.0);
  CHECK(banded.excluded_mass < 1.0);

  // independent re-summation
  double sum = 0.0;
  double mass = 0.0;
  for (Index j = -7; j <= 7; ++j) {
    double w = double(8 - std::abs(j)) / 64.0;
    double t = 0.5 * double(j);
    bool excluded = false;
    for (auto& [a, b] : bands)
      if (t >= a && t < b) excluded = true;
    if (excluded) {
      mass += w;
      continue;
    }
    double c = std::cos(t) / std::sin(t);
    sum += w * c * c;
  }
  CHECK(banded.constant == doctest::Approx(std::sqrt(sum)).epsilon(1e-12));
  CHECK(banded.excluded_mass == doctest::Approx(mass).epsilon(1e-12));
}
