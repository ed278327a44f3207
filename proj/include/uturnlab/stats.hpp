#ifndef UTURNLAB_STATS_HPP
#define UTURNLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace uturnlab {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

// Regularized lower incomplete gamma P(a, x) by series expansion (x < a + 1)
// or by the Lentz continued fraction for Q(a, x) otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 1; n < 100000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return std::exp(log_prefactor) * sum;
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double frac = d;
  for (int n = 1; n < 100000; ++n) {
    double an = -n * (n - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    frac *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(log_prefactor) * frac;
}

}  // namespace detail

inline double chi_square_cdf(double dof, double x) {
  if (x <= 0.0) return 0.0;
  return detail::gamma_p(dof / 2.0, x / 2.0);
}

// Upper tail P(X >= x) for X ~ chi-square(dof).
inline double chi_square_sf(double dof, double x) {
  return 1.0 - chi_square_cdf(dof, x);
}

// Pearson statistic and p-value for observed counts against expected counts.
struct ChiSquareTest {
  double statistic;
  double dof;
  double p_value;
};

inline ChiSquareTest chi_square_test(const std::vector<double>& observed,
                                     const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_test: need matching cell counts");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) throw std::invalid_argument("chi_square_test: zero expected count");
    double diff = observed[i] - expected[i];
    stat += diff * diff / expected[i];
  }
  double dof = static_cast<double>(observed.size()) - 1.0;
  return {stat, dof, chi_square_sf(dof, stat)};
}

// Counts against the uniform distribution over the cells.
inline ChiSquareTest uniform_chi_square_test(const std::vector<double>& observed) {
  double total = 0.0;
  for (double c : observed) total += c;
  std::vector<double> expected(observed.size(), total / static_cast<double>(observed.size()));
  return chi_square_test(observed, expected);
}

// One-sample Kolmogorov-Smirnov distance sup |ECDF - F| for an arbitrary
// reference CDF; samples need not be sorted.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, const Cdf& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    double hi = (static_cast<double>(i) + 1.0) / n - f;
    double lo = f - static_cast<double>(i) / n;
    worst = std::max({worst, hi, lo});
  }
  return worst;
}

// Kolmogorov distribution tail Q(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 101; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

// Asymptotic one-sample KS p-value with the standard small-sample correction.
inline double ks_pvalue(std::size_t n, double d) {
  double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

struct KsTest {
  double statistic;
  double p_value;
};

// Two-sample KS test.
inline KsTest two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("two_sample_ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double va = a[i], vb = b[j];
    if (va <= vb) ++i;
    if (vb <= va) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  double ne = na * nb / (na + nb);
  double sn = std::sqrt(ne);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

struct RunningMoments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }

  // Chan's parallel combination; results depend on the merge order, which
  // callers keep fixed for reproducibility.
  void merge(const RunningMoments& other) {
    if (other.n == 0.0) return;
    if (n == 0.0) {
      *this = other;
      return;
    }
    double total = n + other.n;
    double delta = other.mean - mean;
    mean += delta * other.n / total;
    m2 += other.m2 + delta * delta * n * other.n / total;
    n = total;
  }

  double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double standard_error() const { return n > 0.0 ? stddev() / std::sqrt(n) : 0.0; }
};

// Linear-interpolation quantile of an already sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("sorted_quantile: no samples");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace uturnlab

#endif
