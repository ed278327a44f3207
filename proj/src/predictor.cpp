#include "uturnlab/lab/predictor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "uturnlab/uturn.hpp"

namespace uturnlab::lab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Golden-section minimization on [lo, hi].
template <typename F>
std::pair<double, double> golden_min(const F& f, double lo, double hi, double tol) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double mid = 0.5 * (a + b);
  return {mid, f(mid)};
}

double g_two_scale(double kappa, double ratio, double t) {
  double inv_sqrt_kappa = 1.0 / std::sqrt(kappa);
  return std::sin(inv_sqrt_kappa * t) + std::sin(t) * inv_sqrt_kappa * ratio;
}

// Dense scan plus golden refinement of min g.  Both sine terms are strictly
// positive on (0, pi] whenever kappa >= 1, so any sign violation lives in
// (pi, 2 pi); restricting the scan there keeps the benign root at t -> 0
// from masking the interior minimum.
std::pair<double, double> min_g(double kappa, double ratio) {
  const int n = 10000;
  double best_t = 1.5 * kPi;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= n; ++i) {
    double t = kPi + kPi * static_cast<double>(i) / static_cast<double>(n + 1);
    double v = g_two_scale(kappa, ratio, t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double span = kPi / static_cast<double>(n + 1);
  double lo = std::max(kPi + 1e-12, best_t - span);
  double hi = std::min(kTwoPi - 1e-12, best_t + span);
  auto [t_min, v_min] = golden_min([&](double t) { return g_two_scale(kappa, ratio, t); },
                                   lo, hi, 1e-10);
  return {t_min, std::min(v_min, best)};
}

}  // namespace

OrbitLengthPrediction critical_orbit_length(const ScaleBlockTarget<double>& target,
                                            double h, int k_max, double hbar) {
  if (!(h > 0.0)) throw std::invalid_argument("critical_orbit_length: h must be positive");
  if (k_max < 1 || k_max > 30)
    throw std::invalid_argument("critical_orbit_length: k_max must be in [1, 30]");
  UniformTermSpec<double> spec(target, hbar);
  for (int k = 1; k <= k_max; ++k) {
    double t = h * static_cast<double>((Index(1) << k) - 1);
    if (uniform_term(spec, t) < 0.0) return {t, k, false};
  }
  return {h * static_cast<double>((Index(1) << k_max) - 1), k_max, true};
}

double continuous_critical_time(const ScaleBlockTarget<double>& target) {
  UniformTermSpec<double> spec(target, 0.0);
  // the slow scale's first root bounds the search window
  double limit = 1.05 * kPi / std::sqrt(target.min_stiffness());
  const int n = 200000;
  double prev_t = 0.0;
  for (int i = 1; i <= n; ++i) {
    double t = limit * static_cast<double>(i) / static_cast<double>(n);
    if (uniform_term(spec, t) < 0.0) {
      // bisect the sign change in (prev_t, t]
      double lo = prev_t, hi = t;
      for (int iter = 0; iter < 80; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (uniform_term(spec, mid) < 0.0)
          hi = mid;
        else
          lo = mid;
      }
      return hi;
    }
    prev_t = t;
  }
  return limit;
}

SelectionCondition check_selection_condition(const ScaleBlockTarget<double>& target,
                                             double h, int k_max, double hbar,
                                             double delta) {
  if (delta < 0.0) throw std::invalid_argument("selection condition: delta must be >= 0");
  UniformTermSpec<double> spec(target, hbar);
  SelectionCondition result;
  result.ok = true;
  for (int k = 1; k <= k_max; ++k) {
    double t = h * static_cast<double>((Index(1) << k) - 1);
    double f = uniform_term(spec, t);
    if (f >= -delta && f < delta) {
      result.ok = false;
      result.offenders.push_back({k, t, f});
    }
  }
  return result;
}

PhaseResult phase_membership(double kappa, double ratio) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa))
    throw std::invalid_argument("phase: kappa must be >= 1");
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw std::invalid_argument("phase: ratio must be positive");
  auto [t_min, v_min] = min_g(kappa, ratio);
  PhaseResult result;
  result.min_g = v_min;
  result.argmin_t = t_min;
  result.boundary = std::abs(v_min) <= 1e-10;
  if (kappa < 4.0) {
    result.accelerated = true;
    result.boundary = false;
  } else {
    result.accelerated = v_min >= 0.0 && !result.boundary;
  }
  return result;
}

double phase_boundary_constant() {
  // minimize -t / sin t over (pi, 2 pi); grid plus golden refinement
  const int n = 10000;
  double best_t = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) {
    double t = kPi + kPi * static_cast<double>(i) / static_cast<double>(n);
    double v = -t / std::sin(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double span = kPi / static_cast<double>(n);
  auto [t_min, v_min] = golden_min([](double t) { return -t / std::sin(t); },
                                   best_t - span, best_t + span, 1e-12);
  (void)t_min;
  return v_min;
}

double phase_boundary_ratio(double kappa) {
  if (kappa < 4.0)
    throw std::invalid_argument("phase boundary ratio: defined for kappa >= 4");
  double lo = 0.0, hi = 1.0;
  while (phase_membership(kappa, hi).accelerated) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return hi;
  }
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (phase_membership(kappa, mid).accelerated)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-10 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace uturnlab::lab
