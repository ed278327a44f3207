#ifndef UTURNLAB_UTURN_HPP
#define UTURNLAB_UTURN_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uturnlab/flows.hpp"
#include "uturnlab/target.hpp"
#include "uturnlab/types.hpp"

namespace uturnlab {

// Consecutive integer range of orbit indices.
struct IndexOrbit {
  Index i_min;
  Index i_max;

  IndexOrbit(Index lo, Index hi) : i_min(lo), i_max(hi) {
    if (lo > hi) throw std::invalid_argument("index orbit: i_min > i_max");
  }

  Index length() const { return i_max - i_min + 1; }
  bool contains(Index i) const { return i >= i_min && i <= i_max; }
};

inline bool is_power_of_two(Index n) { return n >= 1 && (n & (n - 1)) == 0; }

namespace detail {

template <typename S>
S uturn_dot_min(const PhasePoint<S>& minus, const PhasePoint<S>& plus) {
  Vec<S> diff = plus.x - minus.x;
  return std::min(plus.v.dot(diff), minus.v.dot(diff));
}

}  // namespace detail

// U-turn diagnostic f = min(v_+ . (x_+ - x_-), v_- . (x_+ - x_-)) between
// the exact-flow states at continuous times t_minus <= t_plus.
template <typename S>
S uturn_diagnostic(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                   S t_minus, S t_plus) {
  if (t_minus > t_plus) throw std::invalid_argument("uturn_diagnostic: t_minus > t_plus");
  if (t_minus == t_plus) return S(0);
  return detail::uturn_dot_min(exact_flow(target, p, t_minus),
                               exact_flow(target, p, t_plus));
}

// Same diagnostic between the grid states at indices i_minus <= i_plus; the
// integer indexing keeps leapfrog timestamps exactly on the grid.
template <typename S>
S uturn_diagnostic(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                   Index i_minus, Index i_plus, const FlowVariant<S>& flow) {
  if (i_minus > i_plus) throw std::invalid_argument("uturn_diagnostic: i_minus > i_plus");
  if (i_minus == i_plus) return S(0);
  return detail::uturn_dot_min(flow_state(target, p, flow, i_minus),
                               flow_state(target, p, flow, i_plus));
}

// Strict sign convention: an orbit has a U-turn iff f < 0; singletons never do.
template <typename S>
bool has_uturn(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
               const IndexOrbit& orbit, const FlowVariant<S>& flow) {
  if (orbit.length() == 1) return false;
  return uturn_diagnostic(target, p, orbit.i_min, orbit.i_max, flow) < S(0);
}

// True iff any orbit in the dyadic halving family of `orbit` (including the
// orbit itself) has the U-turn property.  Requires |I| to be a power of two.
// Singleton members always have f = 0 and are skipped.
template <typename S>
bool has_sub_uturn(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                   const IndexOrbit& orbit, const FlowVariant<S>& flow) {
  Index len = orbit.length();
  if (!is_power_of_two(len))
    throw std::invalid_argument("has_sub_uturn: orbit length must be a power of two");
  for (Index sub_len = len; sub_len >= 2; sub_len /= 2) {
    for (Index lo = orbit.i_min; lo <= orbit.i_max; lo += sub_len) {
      if (has_uturn(target, p, IndexOrbit(lo, lo + sub_len - 1), flow)) return true;
    }
  }
  return false;
}

// Evaluates the endpoint dot products of the diagnostic for one phase point
// at many time pairs.  The flow acts as a per-block rotation, so the dots
// depend on p only through the block invariants |x^i|^2, |v^i|^2, x^i . v^i,
// making each evaluation O(#blocks) instead of O(d).
template <typename S>
class DiagnosticEvaluator {
 public:
  DiagnosticEvaluator(const ScaleBlockTarget<S>& target, const FlowVariant<S>& flow,
                      const PhasePoint<S>& p) {
    if (p.dim() != target.dim())
      throw std::invalid_argument("diagnostic evaluator: dimension mismatch");
    for (Index i = 0; i < target.num_blocks(); ++i) {
      detail::BlockRotation<S> rot(target.stiffness(i), flow);
      Block b;
      b.rate = rot.omega / flow.step;  // angle per unit physical time
      b.scaled_m = rot.scaled_m;
      auto xi = target.block_segment(p.x, i);
      auto vi = target.block_segment(p.v, i);
      b.x2 = xi.squaredNorm();
      b.v2 = vi.squaredNorm();
      b.xv = xi.dot(vi);
      blocks_.push_back(b);
    }
  }

  // (v_- . (x_+ - x_-), v_+ . (x_+ - x_-)) between the states at physical
  // times t_minus <= t_plus.  For leapfrog these must be grid multiples.
  std::pair<S, S> endpoint_dots(S t_minus, S t_plus) const {
    S dot_minus = 0, dot_plus = 0;
    for (const auto& b : blocks_) {
      S ca = std::cos(b.rate * t_minus), sa = std::sin(b.rate * t_minus);
      S cb = std::cos(b.rate * t_plus), sb = std::sin(b.rate * t_plus);
      S dc = cb - ca, ds = sb - sa;
      dot_plus += -sb * dc * b.scaled_m * b.x2 + (cb * dc - sb * ds) * b.xv +
                  cb * ds / b.scaled_m * b.v2;
      dot_minus += -sa * dc * b.scaled_m * b.x2 + (ca * dc - sa * ds) * b.xv +
                   ca * ds / b.scaled_m * b.v2;
    }
    return {dot_minus, dot_plus};
  }

  S diagnostic(S t_minus, S t_plus) const {
    auto [lo, hi] = endpoint_dots(t_minus, t_plus);
    return std::min(lo, hi);
  }

 private:
  struct Block {
    S rate, scaled_m, x2, v2, xv;
  };
  std::vector<Block> blocks_;
};

// Deterministic component of the diagnostic together with its grid spacing
// regime: hbar = 0 for the exact flow, hbar = h for leapfrog.
template <typename S>
struct UniformTermSpec {
  const ScaleBlockTarget<S>& target;
  S hbar;

  UniformTermSpec(const ScaleBlockTarget<S>& t, S hb) : target(t), hbar(hb) {
    if (hb < S(0)) throw std::invalid_argument("uniform term: hbar must be >= 0");
    if (hb * hb * t.max_stiffness() >= S(4))
      throw std::invalid_argument("uniform term: hbar^2 m >= 4");
  }
};

// f_unif(dt) = sum_i d_i sin(beta(hbar^2 m_i) sqrt(m_i) dt) / sqrt(m_i);
// for hbar = 0 this is tr(sin(C^{-1/2} dt) C^{1/2}).
template <typename S>
S uniform_term(const UniformTermSpec<S>& spec, S dt) {
  if (dt < S(0)) throw std::invalid_argument("uniform_term: dt must be >= 0");
  S total = 0;
  for (const auto& b : spec.target.blocks()) {
    S sqrt_m = std::sqrt(b.stiffness);
    S beta = spec.hbar > S(0) ? frequency_correction(spec.hbar * spec.hbar * b.stiffness)
                              : S(1);
    total += static_cast<S>(b.dim) * std::sin(beta * sqrt_m * dt) / sqrt_m;
  }
  return total;
}

// Deviation bound for shell-typical points, summed over blocks:
// delta = sum_i (5 max(alpha_i, r_i) d_i^{-1/2} + hbar^2 m_i d_i^{1/2})
//               * m_i^{-1/2} d_i^{1/2}.
template <typename S>
S deviation_bound(const ScaleBlockTarget<S>& target, const ShellSpec<S>& shell, S hbar) {
  if (!shell.matches(target))
    throw std::invalid_argument("deviation_bound: shell does not match target");
  if (hbar < S(0)) throw std::invalid_argument("deviation_bound: hbar must be >= 0");
  S total = 0;
  for (Index i = 0; i < target.num_blocks(); ++i) {
    auto k = static_cast<std::size_t>(i);
    S m = target.stiffness(i);
    S d = static_cast<S>(target.block_dim(i));
    S sqrt_d = std::sqrt(d);
    total += (S(5) * std::max(shell.alpha[k], shell.r[k]) / sqrt_d +
              hbar * hbar * m * sqrt_d) *
             sqrt_d / std::sqrt(m);
  }
  return total;
}

}  // namespace uturnlab

#endif
