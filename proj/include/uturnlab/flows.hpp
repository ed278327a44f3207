#ifndef UTURNLAB_FLOWS_HPP
#define UTURNLAB_FLOWS_HPP

#include <cmath>
#include <stdexcept>

#include "uturnlab/target.hpp"
#include "uturnlab/types.hpp"

namespace uturnlab {

enum class FlowKind { exact, leapfrog };

// Flow plus the physical time grid h*Z on which orbits are indexed.  The
// exact flow also carries a grid step: it determines the spacing between
// orbit states, not the integrator.
template <typename S>
struct FlowVariant {
  FlowKind kind;
  S step;

  static FlowVariant exact(S grid_step) {
    if (!(grid_step > S(0))) throw std::invalid_argument("flow: step must be positive");
    return {FlowKind::exact, grid_step};
  }
  static FlowVariant leapfrog(S h) {
    if (!(h > S(0))) throw std::invalid_argument("flow: step must be positive");
    return {FlowKind::leapfrog, h};
  }

  S hbar() const { return kind == FlowKind::leapfrog ? step : S(0); }
};

enum class StabilityRegime { stable, marginal, unstable };

// h^2 m <= 1: stable (bounds apply); in [1, 4): marginal; >= 4: unstable.
template <typename S>
StabilityRegime leapfrog_stability(const ScaleBlockTarget<S>& target, S h) {
  S hm = h * h * target.max_stiffness();
  if (hm <= S(1)) return StabilityRegime::stable;
  if (hm < S(4)) return StabilityRegime::marginal;
  return StabilityRegime::unstable;
}

// Frequency correction beta(xi) = arccos(1 - xi/2) / sqrt(xi) on [0, 4),
// with beta(0) = 1 by continuous extension.  Evaluated through the
// cancellation-free identity arccos(1 - xi/2) = 2 asin(sqrt(xi)/2); a short
// series covers tiny xi where the quotient degenerates to 0/0.
template <typename S>
S frequency_correction(S xi) {
  if (!(xi >= S(0)) || xi >= S(4))
    throw std::domain_error("frequency_correction: requires 0 <= xi < 4");
  if (xi < S(1e-6)) return S(1) + xi / S(24) + S(3) * xi * xi / S(640);
  S root = std::sqrt(xi);
  return S(2) * std::asin(root / S(2)) / root;
}

namespace detail {

// Rotation data of one block under the chosen flow: state at grid index l is
//   x_l = cos(omega l) x + sin(omega l) / (cfac sqrt(m)) v
//   v_l = -sin(omega l) cfac sqrt(m) x + cos(omega l) v
// with omega = beta(h^2 m) sqrt(m) h and cfac = sqrt(1 - h^2 m / 4) for
// leapfrog, and omega = sqrt(m) h, cfac = 1 for the exact flow.
template <typename S>
struct BlockRotation {
  S omega;
  S scaled_m;  // cfac * sqrt(m)

  BlockRotation(S m, const FlowVariant<S>& flow) {
    S sqrt_m = std::sqrt(m);
    if (flow.kind == FlowKind::leapfrog) {
      S xi = flow.step * flow.step * m;
      if (xi >= S(4))
        throw std::domain_error("leapfrog: h^2 m >= 4, integrator unstable");
      omega = frequency_correction(xi) * sqrt_m * flow.step;
      scaled_m = std::sqrt(S(1) - xi / S(4)) * sqrt_m;
    } else {
      omega = sqrt_m * flow.step;
      scaled_m = sqrt_m;
    }
  }
};

}  // namespace detail

// Closed-form Hamiltonian flow for time t: per block a rotation at angular
// frequency sqrt(m).
template <typename S>
PhasePoint<S> exact_flow(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p, S t) {
  if (p.dim() != target.dim()) throw std::invalid_argument("exact_flow: dimension mismatch");
  PhasePoint<S> out;
  out.x.resize(target.dim());
  out.v.resize(target.dim());
  for (Index i = 0; i < target.num_blocks(); ++i) {
    S sqrt_m = std::sqrt(target.stiffness(i));
    S c = std::cos(sqrt_m * t);
    S s = std::sin(sqrt_m * t);
    auto xi = target.block_segment(p.x, i);
    auto vi = target.block_segment(p.v, i);
    Index off = target.block_offset(i);
    Index d = target.block_dim(i);
    out.x.segment(off, d) = c * xi + (s / sqrt_m) * vi;
    out.v.segment(off, d) = (-s * sqrt_m) * xi + c * vi;
  }
  return out;
}

// Closed form of n leapfrog steps of size h: per block a rotation at the
// corrected frequency beta(h^2 m) sqrt(m).  Negative n flows backward.
template <typename S>
PhasePoint<S> leapfrog_flow(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                            Index n, S h) {
  if (p.dim() != target.dim())
    throw std::invalid_argument("leapfrog_flow: dimension mismatch");
  auto flow = FlowVariant<S>::leapfrog(h);
  PhasePoint<S> out;
  out.x.resize(target.dim());
  out.v.resize(target.dim());
  for (Index i = 0; i < target.num_blocks(); ++i) {
    detail::BlockRotation<S> rot(target.stiffness(i), flow);
    S theta = rot.omega * static_cast<S>(n);
    S c = std::cos(theta);
    S s = std::sin(theta);
    auto xi = target.block_segment(p.x, i);
    auto vi = target.block_segment(p.v, i);
    Index off = target.block_offset(i);
    Index d = target.block_dim(i);
    out.x.segment(off, d) = c * xi + (s / rot.scaled_m) * vi;
    out.v.segment(off, d) = (-s * rot.scaled_m) * xi + c * vi;
  }
  return out;
}

// State at grid index l under the given flow variant.
template <typename S>
PhasePoint<S> flow_state(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                         const FlowVariant<S>& flow, Index l) {
  if (flow.kind == FlowKind::leapfrog) return leapfrog_flow(target, p, l, flow.step);
  return exact_flow(target, p, flow.step * static_cast<S>(l));
}

// H(x, v) = sum_j m_j x_j^2 / 2 + |v|^2 / 2 (normalizing constant dropped).
template <typename S>
S hamiltonian(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p) {
  S e = S(0.5) * p.v.squaredNorm();
  for (Index i = 0; i < target.num_blocks(); ++i)
    e += S(0.5) * target.stiffness(i) * target.block_segment(p.x, i).squaredNorm();
  return e;
}

// Shadow energy H_h(x, v) = H(x, v) - sum_i (h^2 m_i / 8) |sqrt(m_i) x^i|^2,
// exactly conserved by the leapfrog flow.
template <typename S>
S modified_hamiltonian(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p, S h) {
  S e = hamiltonian(target, p);
  for (Index i = 0; i < target.num_blocks(); ++i) {
    S m = target.stiffness(i);
    e -= (h * h * m / S(8)) * m * target.block_segment(p.x, i).squaredNorm();
  }
  return e;
}

// max over l in [l_min, l_max] of |H(state at l) - H(p)|, measured on the
// actual flow states.
template <typename S>
S energy_error_max(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                   const FlowVariant<S>& flow, Index l_min, Index l_max) {
  if (l_min > l_max) throw std::invalid_argument("energy_error_max: empty index range");
  S h0 = hamiltonian(target, p);
  S worst = 0;
  for (Index l = l_min; l <= l_max; ++l) {
    S err = std::abs(hamiltonian(target, flow_state(target, p, flow, l)) - h0);
    worst = std::max(worst, err);
  }
  return worst;
}

// Bound on the leapfrog energy error for shell-typical points:
// h^2 max_i (m_i max(alpha_i, r_i) + h^2 m_i^2 d_i).
template <typename S>
S energy_error_bound(const ScaleBlockTarget<S>& target, const ShellSpec<S>& shell, S h) {
  S worst = 0;
  for (Index i = 0; i < target.num_blocks(); ++i) {
    auto k = static_cast<std::size_t>(i);
    S m = target.stiffness(i);
    S term = m * std::max(shell.alpha[k], shell.r[k]) +
             h * h * m * m * static_cast<S>(target.block_dim(i));
    worst = std::max(worst, term);
  }
  return h * h * worst;
}

}  // namespace uturnlab

#endif
