#ifndef UTURNLAB_HMC_HPP
#define UTURNLAB_HMC_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "uturnlab/flows.hpp"
#include "uturnlab/rng.hpp"
#include "uturnlab/target.hpp"
#include "uturnlab/types.hpp"

namespace uturnlab {

enum class LawKind { point, triangular, exponential };

// Triangular weights w_j = max(2^{k*} - |j|, 0) / 2^{2 k*} on times h j.
// All weights are dyadic rationals and sum to one exactly.
template <typename S>
std::vector<std::pair<Index, S>> triangular_weights(S h, int k_star) {
  if (!(h > S(0))) throw std::invalid_argument("triangular law: h must be positive");
  if (k_star < 0 || k_star > 30)
    throw std::invalid_argument("triangular law: k_star must be in [0, 30]");
  const Index peak = Index(1) << k_star;
  const S norm = static_cast<S>(peak) * static_cast<S>(peak);
  std::vector<std::pair<Index, S>> w;
  w.reserve(static_cast<std::size_t>(2 * peak - 1));
  for (Index j = -(peak - 1); j <= peak - 1; ++j)
    w.emplace_back(j, static_cast<S>(peak - std::abs(j)) / norm);
  return w;
}

// State-independent integration-time law: a point mass, the triangular law
// arising from uniform orbit and index selection, or an exponential law
// (exact flow only, since leapfrog requires grid support).
template <typename S>
class IntegrationTimeLaw {
 public:
  static IntegrationTimeLaw point(S t) {
    IntegrationTimeLaw law;
    law.kind_ = LawKind::point;
    law.time_ = t;
    return law;
  }

  static IntegrationTimeLaw triangular(S h, int k_star) {
    IntegrationTimeLaw law;
    law.kind_ = LawKind::triangular;
    law.h_ = h;
    law.k_star_ = k_star;
    law.weights_ = triangular_weights(h, k_star);
    return law;
  }

  static IntegrationTimeLaw exponential(S lambda) {
    if (!(lambda > S(0)))
      throw std::invalid_argument("exponential law: lambda must be positive");
    IntegrationTimeLaw law;
    law.kind_ = LawKind::exponential;
    law.lambda_ = lambda;
    return law;
  }

  LawKind kind() const { return kind_; }
  S point_time() const { return time_; }
  S grid_step() const { return h_; }
  int k_star() const { return k_star_; }
  S rate() const { return lambda_; }
  const std::vector<std::pair<Index, S>>& weights() const { return weights_; }

  void check_compatible(const FlowVariant<S>& flow) const {
    if (flow.kind != FlowKind::leapfrog) return;
    if (kind_ == LawKind::exponential)
      throw std::invalid_argument("exponential law requires the exact flow");
    if (kind_ == LawKind::point) {
      S ratio = time_ / flow.step;
      if (std::abs(ratio - std::round(ratio)) > S(1e-9) * (S(1) + std::abs(ratio)))
        throw std::invalid_argument("point law: time is off the leapfrog grid");
    }
    if (kind_ == LawKind::triangular && h_ != flow.step)
      throw std::invalid_argument("triangular law: grid step differs from leapfrog step");
  }

  // Draws an integration time; triangular times are returned as exact grid
  // multiples via their integer index.
  S sample(RngStream& rng) const {
    switch (kind_) {
      case LawKind::point:
        return time_;
      case LawKind::exponential:
        return -std::log(static_cast<S>(rng.uniform())) / lambda_;
      default: {
        return h_ * static_cast<S>(sample_grid_index(rng));
      }
    }
  }

  Index sample_grid_index(RngStream& rng) const {
    S u = static_cast<S>(rng.uniform());
    S cum = 0;
    for (const auto& [j, w] : weights_) {
      cum += w;
      if (cum >= u) return j;
    }
    return weights_.back().first;
  }

 private:
  LawKind kind_ = LawKind::point;
  S time_ = 0;
  S h_ = 0;
  int k_star_ = 0;
  S lambda_ = 0;
  std::vector<std::pair<Index, S>> weights_;
};

// One HMC transition: fresh velocity v, fresh time T ~ law, position of the
// flow at time T.
template <typename S>
Vec<S> hmc_transition(const ScaleBlockTarget<S>& target, const Vec<S>& x,
                      const IntegrationTimeLaw<S>& law, const FlowVariant<S>& flow,
                      RngStream& rng) {
  law.check_compatible(flow);
  PhasePoint<S> p{x, rng.gaussian_vector<S>(target.dim())};
  if (flow.kind == FlowKind::leapfrog) {
    Index n = law.kind() == LawKind::triangular
                  ? law.sample_grid_index(rng)
                  : static_cast<Index>(std::llround(law.sample(rng) / flow.step));
    return leapfrog_flow(target, p, n, flow.step).x;
  }
  return exact_flow(target, p, law.sample(rng)).x;
}

// Synchronous coupling: both copies share the velocity draw and the
// integration time, so per coordinate the difference contracts by exactly
// cos(beta(hbar^2 m) sqrt(m) T).
template <typename S>
std::pair<Vec<S>, Vec<S>> coupled_hmc_step(const ScaleBlockTarget<S>& target,
                                           const Vec<S>& x, const Vec<S>& x_tilde,
                                           const IntegrationTimeLaw<S>& law,
                                           const FlowVariant<S>& flow, RngStream& rng) {
  law.check_compatible(flow);
  Vec<S> v = rng.gaussian_vector<S>(target.dim());
  PhasePoint<S> p{x, v};
  PhasePoint<S> q{x_tilde, v};
  if (flow.kind == FlowKind::leapfrog) {
    Index n = law.kind() == LawKind::triangular
                  ? law.sample_grid_index(rng)
                  : static_cast<Index>(std::llround(law.sample(rng) / flow.step));
    return {leapfrog_flow(target, p, n, flow.step).x,
            leapfrog_flow(target, q, n, flow.step).x};
  }
  S t = law.sample(rng);
  return {exact_flow(target, p, t).x, exact_flow(target, q, t).x};
}

// Exact Wasserstein contraction rate of HMC with the triangular law:
// rho = (1/2) min over block stiffnesses of sum_j w_j sin^2(beta sqrt(m) h j).
template <typename S>
S exact_contraction_rate(const ScaleBlockTarget<S>& target,
                         const IntegrationTimeLaw<S>& law, S hbar) {
  if (law.kind() != LawKind::triangular)
    throw std::invalid_argument("contraction rate: requires the triangular law");
  S rho = std::numeric_limits<S>::infinity();
  for (const auto& block : target.blocks()) {
    S m = block.stiffness;
    S beta = hbar > S(0) ? frequency_correction(hbar * hbar * m) : S(1);
    S omega = beta * std::sqrt(m) * law.grid_step();
    S integral = 0;
    for (const auto& [j, w] : law.weights()) {
      S s = std::sin(omega * static_cast<S>(j));
      integral += w * s * s;
    }
    rho = std::min(rho, integral / S(2));
  }
  return rho;
}

template <typename S>
struct ShiftCoupling {
  Vec<S> v_tilde;
  bool met;
};

// Maximal coupling of a standard Gaussian velocity v with its shift v + s:
// reflection-maximal along the direction of s, sharing the orthogonal
// complement.  The returned draw is exactly standard Gaussian and meets
// (v_tilde = v + s) with probability 2 Phi(-|s|/2).
template <typename S>
ShiftCoupling<S> maximal_shift_meet(const Vec<S>& v, const Vec<S>& s, RngStream& rng) {
  S norm = s.norm();
  if (norm == S(0)) return {v, true};
  Vec<S> e = s / norm;
  S z = e.dot(v);
  // accept with probability phi(z + |s|) / phi(z)
  S log_accept = -(S(2) * z * norm + norm * norm) / S(2);
  if (std::log(static_cast<S>(rng.uniform())) <= log_accept) {
    return {v + s, true};
  }
  return {v - S(2) * z * e, false};
}

template <typename S>
using IntervalSet = std::vector<std::pair<S, S>>;  // half-open [a, b)

template <typename S>
bool interval_set_contains(const IntervalSet<S>& set, S t) {
  for (const auto& [a, b] : set)
    if (t >= a && t < b) return true;
  return false;
}

// Bands of half-width delta / (beta sqrt(m)) around the cotangent poles
// t = pi l / (beta sqrt(m)) of every block, covering the law's support.
template <typename S>
IntervalSet<S> cot_pole_bands(const ScaleBlockTarget<S>& target,
                              const IntegrationTimeLaw<S>& law, S hbar, S delta) {
  if (law.kind() != LawKind::triangular)
    throw std::invalid_argument("cot_pole_bands: requires the triangular law");
  if (!(delta > S(0)) || delta >= S(3.141592653589793))
    throw std::invalid_argument("cot_pole_bands: delta must be in (0, pi)");
  const S pi = S(3.141592653589793238462643383279503);
  S t_max = law.grid_step() * static_cast<S>(Index(1) << law.k_star());
  IntervalSet<S> bands;
  for (const auto& block : target.blocks()) {
    S m = block.stiffness;
    S beta = hbar > S(0) ? frequency_correction(hbar * hbar * m) : S(1);
    S scale = beta * std::sqrt(m);
    auto l_max = static_cast<Index>(std::ceil(scale * t_max / pi)) + 1;
    for (Index l = -l_max; l <= l_max; ++l) {
      bands.emplace_back((pi * static_cast<S>(l) - delta) / scale,
                         (pi * static_cast<S>(l) + delta) / scale);
    }
  }
  return bands;
}

template <typename S>
struct RegularizationResult {
  S constant;       // sup_m ( sum_{t not excluded} w_t cot^2(beta sqrt(m) t) )^{1/2}
  S excluded_mass;  // law mass on the excluded set
  bool finite;      // false iff a kept support point sits on a cotangent pole
};

// Exact regularization constant of the triangular law outside an excluded
// set of time intervals.  A cotangent pole (sin = 0, e.g. t = 0) inside the
// kept support is signaled as an infinite result.
template <typename S>
RegularizationResult<S> exact_regularization_constant(const ScaleBlockTarget<S>& target,
                                                      const IntegrationTimeLaw<S>& law,
                                                      S hbar,
                                                      const IntervalSet<S>& excluded) {
  if (law.kind() != LawKind::triangular)
    throw std::invalid_argument("regularization constant: requires the triangular law");
  S worst = 0;
  S excluded_mass = 0;
  bool finite = true;
  bool first_block = true;
  for (const auto& block : target.blocks()) {
    S m = block.stiffness;
    S beta = hbar > S(0) ? frequency_correction(hbar * hbar * m) : S(1);
    S omega = beta * std::sqrt(m) * law.grid_step();
    S sum = 0;
    for (const auto& [j, w] : law.weights()) {
      S t = law.grid_step() * static_cast<S>(j);
      if (interval_set_contains(excluded, t)) {
        if (first_block) excluded_mass += w;
        continue;
      }
      S s = std::sin(omega * static_cast<S>(j));
      if (s == S(0)) {
        finite = false;
        continue;
      }
      S c = std::cos(omega * static_cast<S>(j));
      sum += w * (c / s) * (c / s);
    }
    first_block = false;
    worst = std::max(worst, sum);
  }
  return {std::sqrt(worst), excluded_mass,
          finite};
}

}  // namespace uturnlab

#endif
