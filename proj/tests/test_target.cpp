#include <cmath>

#include <doctest.h>

#include "uturnlab/rng.hpp"
#include "uturnlab/target.hpp"

using namespace uturnlab;

using Target = ScaleBlockTarget<double>;

TEST_CASE("presets normalize, sort and merge blocks") {
  auto iso = Target::isotropic(1.0, 100);
  CHECK(iso.num_blocks() == 1);
  CHECK(iso.dim() == 100);
  CHECK(iso.stiffness(0) == 1.0);

  auto ts = Target::two_scale(1.0, 100.0, 50, 500);
  CHECK(ts.num_blocks() == 2);
  CHECK(ts.condition_number() == doctest::Approx(100.0));
  CHECK(ts.dim_ratio() == doctest::Approx(10.0));

  auto merged = Target::two_scale(2.0, 2.0, 3, 4);
  CHECK(merged.num_blocks() == 1);
  CHECK(merged.block_dim(0) == 7);

  auto unsorted = Target({{5.0, 2}, {1.0, 3}, {5.0, 1}});
  CHECK(unsorted.num_blocks() == 2);
  CHECK(unsorted.stiffness(0) == 1.0);
  CHECK(unsorted.block_dim(1) == 3);

  CHECK_THROWS_AS(Target::isotropic(0.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(Target::isotropic(-1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(Target::isotropic(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(Target::two_scale(2.0, 1.0, 3, 3), std::invalid_argument);
}

TEST_CASE("harmonic chain spectrum and traces") {
  auto chain = Target::harmonic_chain(3);
  REQUIRE(chain.num_blocks() == 3);
  CHECK(chain.stiffness(0) == 1.0);
  CHECK(chain.stiffness(1) == 4.0);
  CHECK(chain.stiffness(2) == 9.0);
  CHECK(chain.trace_sqrt_cov() == doctest::Approx(11.0 / 6.0).epsilon(1e-14));
  CHECK(chain.trace_cov() == doctest::Approx(1.0 + 0.25 + 1.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("two_scale_norm closed-form values") {
  auto target = Target({{1.0, 2}, {100.0, 2}});
  Vec<double> zero = Vec<double>::Zero(4);
  CHECK(two_scale_norm(target, zero) == 0.0);

  Vec<double> x(4);
  x << 3.0, 4.0, 0.1, 0.0;
  CHECK(two_scale_norm(target, x) == doctest::Approx(std::sqrt(26.0)).epsilon(1e-14));

  auto iso = Target::isotropic(4.0, 3);
  Vec<double> e(3);
  e << 1.0, 0.0, 0.0;
  CHECK(two_scale_norm(iso, e) == doctest::Approx(2.0).epsilon(1e-14));

  Vec<double> wrong = Vec<double>::Zero(3);
  CHECK_THROWS_AS(two_scale_norm(target, wrong), std::invalid_argument);
}

TEST_CASE("two_scale_norm is a norm") {
  auto target = Target({{0.5, 3}, {7.0, 4}});
  RngStream rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    Vec<double> a = rng.gaussian_vector<double>(7);
    Vec<double> b = rng.gaussian_vector<double>(7);
    double c = 3.0 * (rng.uniform() - 0.5);
    CHECK(two_scale_norm(target, (c * a).eval()) ==
          doctest::Approx(std::abs(c) * two_scale_norm(target, a)).epsilon(1e-12));
    CHECK(two_scale_norm(target, (a + b).eval()) <=
          two_scale_norm(target, a) + two_scale_norm(target, b) + 1e-12);
    if (a.norm() > 0) CHECK(two_scale_norm(target, a) > 0.0);
  }
}

TEST_CASE("stationary sampling moments and shell coverage") {
  auto target = Target({{4.0, 40}, {25.0, 60}});
  RngStream rng(7);
  const int n = 100000;
  double sum_x0 = 0.0, sum_x0_sq = 0.0;
  int in_shell = 0;
  auto shell = default_shell(target);
  for (int i = 0; i < n; ++i) {
    auto p = sample_phase_point(target, rng);
    sum_x0 += p.x[0];
    sum_x0_sq += p.x[0] * p.x[0];
    if (in_position_shell(target, p.x, shell)) ++in_shell;
  }
  double mean = sum_x0 / n;
  double var = sum_x0_sq / n - mean * mean;
  // x_0 has variance 1/4; mean within 4 sigma/sqrt(n), variance within 3 SE
  CHECK(std::abs(mean) < 4.0 * 0.5 / std::sqrt(double(n)));
  CHECK(std::abs(var - 0.25) < 3.0 * 0.25 * std::sqrt(2.0 / n) + 1e-3);
  // product of per-block bounds 1 - 2 exp(-9/8)
  double per_block = 1.0 - 2.0 * std::exp(-9.0 / 8.0);
  CHECK(double(in_shell) / n >= per_block * per_block);
}

TEST_CASE("shell coverage meets the probability bounds at scales 2, 3, 4") {
  auto target = Target({{1.0, 60}, {16.0, 80}});
  RngStream rng(23);
  const int n = 20000;
  for (double c : {2.0, 3.0, 4.0}) {
    auto shell = ShellSpec<double>::scaled(target, c);
    int in_d = 0, in_e = 0;
    for (int i = 0; i < n; ++i) {
      auto p = sample_phase_point(target, rng);
      if (in_position_shell(target, p.x, shell)) ++in_d;
      if (in_velocity_set(target, p.x, p.v, shell)) ++in_e;
    }
    double d_bound = 1.0 - 2.0 * std::exp(-c * c / 8.0);
    double e_bound = 1.0 - 4.0 * std::exp(-c * c / 8.0);
    // per-block bounds combine multiplicatively across the two blocks
    CHECK(double(in_d) / n >= std::max(0.0, d_bound) * std::max(0.0, d_bound));
    CHECK(double(in_e) / n >= std::max(0.0, e_bound) * std::max(0.0, e_bound));
  }
}

TEST_CASE("position shell membership") {
  auto target = Target::isotropic(1.0, 4);
  ShellSpec<double> shell{{1.0}, {1.0}};
  Vec<double> x(4);
  x << 1.0, 1.0, 1.0, 1.0;
  CHECK(in_position_shell(target, x, shell));
  CHECK_FALSE(in_position_shell(target, Vec<double>::Zero(4).eval(), shell));

  auto stiff = Target::isotropic(4.0, 1);
  ShellSpec<double> tight{{0.1}, {0.1}};
  Vec<double> half(1);
  half << 0.5;
  CHECK(in_position_shell(stiff, half, tight));
}

TEST_CASE("velocity set membership") {
  auto target = Target::isotropic(1.0, 4);
  ShellSpec<double> shell{{4.0}, {4.0}};
  Vec<double> x = Vec<double>::Zero(4);
  CHECK(in_velocity_set(target, x, Vec<double>::Zero(4).eval(), shell));

  auto one = Target::isotropic(1.0, 1);
  ShellSpec<double> tight{{1.0}, {0.5}};
  Vec<double> xs(1), vs(1);
  xs << 1.0;
  vs << 1.0;
  CHECK_FALSE(in_velocity_set(one, xs, vs, tight));
}

TEST_CASE("velocity set coverage under stationarity") {
  auto target = Target({{1.0, 50}, {9.0, 50}});
  auto shell = default_shell(target);
  RngStream rng(11);
  int inside = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto p = sample_phase_point(target, rng);
    if (in_velocity_set(target, p.x, p.v, shell)) ++inside;
  }
  // per-block bound 1 - 4 exp(-9/8) is vacuous; the empirical rate is far higher
  double bound = 1.0 - 4.0 * std::exp(-9.0 / 8.0);
  CHECK(double(inside) / n >= std::max(0.0, bound));
  CHECK(double(inside) / n > 0.85);
}

TEST_CASE("shell growth schedule") {
  auto iso100 = Target::isotropic(1.0, 100);
  ShellSpec<double> shell0{{10.0}, {10.0}};
  auto grown0 = shell_growth(shell0, {20.0}, 0.0, 0, iso100);
  CHECK(grown0.alpha[0] == doctest::Approx(20.0));

  auto grown3 = shell_growth(shell0, {20.0}, 0.0, 3, iso100);
  CHECK(grown3.alpha[0] == doctest::Approx(80.0));

  auto stiff = Target::isotropic(100.0, 100);
  ShellSpec<double> zero{{0.0}, {0.0}};
  auto grown1 = shell_growth(zero, {0.0}, 0.1, 1, stiff);
  CHECK(grown1.alpha[0] == doctest::Approx(100.0));

  auto quarter = shell_growth(zero, {0.0}, 0.25, 1, stiff);
  CHECK(quarter.alpha[0] == 625.0);
  CHECK_FALSE(quarter.within_probability_regime(stiff));
  auto small = shell_growth(zero, {0.0}, 0.0625, 1, stiff);
  CHECK(small.alpha[0] == 39.0625);
  CHECK(small.within_probability_regime(stiff));

  // componentwise monotone in n
  auto two = Target({{1.0, 30}, {50.0, 20}});
  ShellSpec<double> s0{{5.0, 3.0}, {4.0, 2.0}};
  RngStream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> r{6.0 * rng.uniform(), 6.0 * rng.uniform()};
    double hbar = 0.2 * rng.uniform();
    Index n = static_cast<Index>(rng.below(20));
    auto a = shell_growth(s0, r, hbar, n, two);
    auto b = shell_growth(s0, r, hbar, n + 1, two);
    for (std::size_t i = 0; i < a.alpha.size(); ++i) CHECK(b.alpha[i] >= a.alpha[i]);
  }

  CHECK_THROWS_AS(shell_growth(shell0, {20.0}, 0.0, -1, iso100), std::invalid_argument);
}
