#ifndef UTURNLAB_NUTS_HPP
#define UTURNLAB_NUTS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "uturnlab/flows.hpp"
#include "uturnlab/rng.hpp"
#include "uturnlab/target.hpp"
#include "uturnlab/types.hpp"
#include "uturnlab/uturn.hpp"

namespace uturnlab {

template <typename S>
struct OrbitParams {
  S h;
  int k_max;
  FlowKind kind;

  OrbitParams(S step, int max_doublings, FlowKind flow_kind)
      : h(step), k_max(max_doublings), kind(flow_kind) {
    if (!(h > S(0))) throw std::invalid_argument("orbit params: h must be positive");
    if (k_max < 0 || k_max > 30)
      throw std::invalid_argument("orbit params: k_max must be in [0, 30]");
  }

  FlowVariant<S> flow() const {
    return kind == FlowKind::leapfrog ? FlowVariant<S>::leapfrog(h)
                                      : FlowVariant<S>::exact(h);
  }
  S hbar() const { return kind == FlowKind::leapfrog ? h : S(0); }
  Index max_orbit_length() const { return Index(1) << k_max; }
};

enum class StopReason : std::uint8_t {
  extension_sub_uturn,
  extended_uturn,
  cap_reached,
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::extension_sub_uturn: return "extension_sub_uturn";
    case StopReason::extended_uturn: return "extended_uturn";
    default: return "kmax_reached";
  }
}

// Result of one orbit construction.  delta_h holds the energy errors
// H(state at i) - H(p) ordered i_min..i_max; it is empty for the exact flow,
// where all errors vanish identically.
template <typename S>
struct OrbitTrace {
  IndexOrbit orbit{0, 0};
  StopReason stop = StopReason::cap_reached;
  std::vector<std::uint8_t> directions;  // 1 = forward, per performed doubling
  std::vector<S> delta_h;

  S delta_h_at(Index i) const {
    if (!orbit.contains(i)) throw std::out_of_range("orbit trace: index outside orbit");
    if (delta_h.empty()) return S(0);
    return delta_h[static_cast<std::size_t>(i - orbit.i_min)];
  }
};

template <typename S>
struct TransitionRecord {
  Index orbit_length = 1;
  Index min_index = 0;
  StopReason stop = StopReason::cap_reached;
  Index iota = 0;
  S delta_h_iota = 0;
};

namespace detail {

// Index selection from Boltzmann log-weights: weights are exponentiated
// after subtracting the max, then sampled by one inverse-CDF scan.  A weight
// that underflows to zero is never selected.
template <typename S>
Index select_from_log_weights(const std::vector<S>& log_w, RngStream& rng) {
  S lw_max = -std::numeric_limits<S>::infinity();
  for (S lw : log_w) lw_max = std::max(lw_max, lw);
  S total = 0;
  for (S lw : log_w) total += std::exp(lw - lw_max);
  S threshold = static_cast<S>(rng.uniform()) * total;
  S cum = 0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    S w = std::exp(log_w[i] - lw_max);
    if (w > S(0)) last_positive = i;
    cum += w;
    if (cum >= threshold && w > S(0)) return static_cast<Index>(i);
  }
  return static_cast<Index>(last_positive);
}

// Uniform part |I| min_i w_i / sum_i w_i of a Boltzmann-weighted categorical
// distribution, computed scale-free from log-weights.
template <typename S>
S uniform_part_from_log_weights(const std::vector<S>& log_w) {
  S lw_max = -std::numeric_limits<S>::infinity();
  for (S lw : log_w) lw_max = std::max(lw_max, lw);
  S total = 0;
  S w_min = std::numeric_limits<S>::infinity();
  for (S lw : log_w) {
    S w = std::exp(lw - lw_max);
    total += w;
    w_min = std::min(w_min, w);
  }
  return static_cast<S>(log_w.size()) * w_min / total;
}

}  // namespace detail

// Orbit bookkeeping engine.  For scale-block Gaussians every quantity the
// construction needs -- endpoint dot products and energy errors -- reduces to
// the per-block invariants |x^i|^2, |v^i|^2, x^i . v^i of the initial point
// together with the per-(block, index) rotation coefficients, which the
// engine caches once per visited index.  Full phase states are reconstructed
// on demand in O(d) via state_at().
template <typename S>
class NutsSampler {
 public:
  NutsSampler(const ScaleBlockTarget<S>& target, const OrbitParams<S>& params)
      : target_(&target), params_(params) {
    auto flow = params.flow();
    for (Index i = 0; i < target.num_blocks(); ++i)
      rot_.emplace_back(target.stiffness(i), flow);
    n_blocks_ = static_cast<std::size_t>(target.num_blocks());
  }

  const ScaleBlockTarget<S>& target() const { return *target_; }
  const OrbitParams<S>& params() const { return params_; }

  // Runs the doubling construction from p.  Consumes one direction coin per
  // attempted doubling.
  void build_orbit(const PhasePoint<S>& p, RngStream& rng, OrbitTrace<S>& trace) {
    reset(p);
    trace.directions.clear();
    trace.delta_h.clear();
    Index lo = 0, hi = 0;
    StopReason stop = StopReason::cap_reached;
    const Index cap = params_.max_orbit_length();
    while (hi - lo + 1 < cap) {
      Index len = hi - lo + 1;
      bool forward = rng.coin();
      Index ext_lo = forward ? hi + 1 : lo - len;
      Index ext_hi = forward ? hi + len : lo - 1;
      ensure_range(ext_lo, ext_hi);
      if (extension_has_sub_uturn(ext_lo, ext_hi)) {
        stop = StopReason::extension_sub_uturn;
        break;
      }
      lo = std::min(lo, ext_lo);
      hi = std::max(hi, ext_hi);
      trace.directions.push_back(forward ? 1 : 0);
      if (diagnostic(lo, hi) < S(0)) {
        stop = StopReason::extended_uturn;
        break;
      }
    }
    trace.orbit = IndexOrbit(lo, hi);
    trace.stop = stop;
    if (params_.kind == FlowKind::leapfrog) {
      trace.delta_h.resize(static_cast<std::size_t>(hi - lo + 1));
      for (Index l = lo; l <= hi; ++l)
        trace.delta_h[static_cast<std::size_t>(l - lo)] = cached_dh(l);
    }
  }

  // Boltzmann-weighted index selection; exactly uniform for the exact flow.
  Index select_index(const OrbitTrace<S>& trace, RngStream& rng) const {
    Index len = trace.orbit.length();
    if (trace.delta_h.empty()) {
      // Equal weights: inverse CDF reduces to ceil(u len) - 1 for u in (0, 1].
      S u = static_cast<S>(rng.uniform());
      Index offset = static_cast<Index>(std::ceil(u * static_cast<S>(len))) - 1;
      offset = std::max<Index>(0, std::min(offset, len - 1));
      return trace.orbit.i_min + offset;
    }
    log_w_.assign(trace.delta_h.size(), S(0));
    for (std::size_t i = 0; i < trace.delta_h.size(); ++i) log_w_[i] = -trace.delta_h[i];
    return trace.orbit.i_min + detail::select_from_log_weights(log_w_, rng);
  }

  // Energy errors H(state at l) - H(p) over an explicit index range.
  void energy_errors(const PhasePoint<S>& p, const IndexOrbit& orbit, std::vector<S>& dh) {
    reset(p);
    ensure_range(orbit.i_min, orbit.i_max);
    dh.resize(static_cast<std::size_t>(orbit.length()));
    for (Index l = orbit.i_min; l <= orbit.i_max; ++l)
      dh[static_cast<std::size_t>(l - orbit.i_min)] = cached_dh(l);
  }

  S uniform_part_probability(const OrbitTrace<S>& trace) const {
    if (trace.delta_h.empty()) return S(1);
    log_w_.assign(trace.delta_h.size(), S(0));
    for (std::size_t i = 0; i < trace.delta_h.size(); ++i) log_w_[i] = -trace.delta_h[i];
    return detail::uniform_part_from_log_weights(log_w_);
  }

  // Position of the state at grid index l along the current orbit's flow.
  Vec<S> position_at(const PhasePoint<S>& p, Index l) const {
    Vec<S> out(target_->dim());
    for (std::size_t b = 0; b < n_blocks_; ++b) {
      Index bi = static_cast<Index>(b);
      S theta = rot_[b].omega * static_cast<S>(l);
      S c = std::cos(theta), s = std::sin(theta);
      Index off = target_->block_offset(bi);
      Index d = target_->block_dim(bi);
      out.segment(off, d) =
          c * p.x.segment(off, d) + (s / rot_[b].scaled_m) * p.v.segment(off, d);
    }
    return out;
  }

  // Full transition: fresh velocity, orbit construction, index selection.
  TransitionRecord<S> step(Vec<S>& x, RngStream& rng) {
    PhasePoint<S> p{std::move(x), rng.gaussian_vector<S>(target_->dim())};
    build_orbit(p, rng, trace_);
    Index iota = select_index(trace_, rng);
    TransitionRecord<S> rec;
    rec.orbit_length = trace_.orbit.length();
    rec.min_index = trace_.orbit.i_min;
    rec.stop = trace_.stop;
    rec.iota = iota;
    rec.delta_h_iota = trace_.delta_h_at(iota);
    x = position_at(p, iota);
    return rec;
  }

  const OrbitTrace<S>& last_trace() const { return trace_; }

 private:
  void reset(const PhasePoint<S>& p) {
    if (p.dim() != target_->dim())
      throw std::invalid_argument("nuts: phase point dimension mismatch");
    x2_.resize(n_blocks_);
    v2_.resize(n_blocks_);
    xv_.resize(n_blocks_);
    for (std::size_t b = 0; b < n_blocks_; ++b) {
      Index bi = static_cast<Index>(b);
      auto xi = target_->block_segment(p.x, bi);
      auto vi = target_->block_segment(p.v, bi);
      x2_[b] = xi.squaredNorm();
      v2_[b] = vi.squaredNorm();
      xv_[b] = xi.dot(vi);
    }
    trig_fw_.clear();
    trig_bk_.clear();
    dh_fw_.clear();
    dh_bk_.clear();
    n_fw_ = 0;
    n_bk_ = 0;
    ensure_range(0, 0);
  }

  void append_node(Index l, std::vector<S>& trig, std::vector<S>& dh) {
    const bool leapfrog = params_.kind == FlowKind::leapfrog;
    const S hh = params_.h * params_.h;
    S energy_err = 0;
    for (std::size_t b = 0; b < n_blocks_; ++b) {
      S theta = rot_[b].omega * static_cast<S>(l);
      S c = std::cos(theta), s = std::sin(theta);
      trig.push_back(c);
      trig.push_back(s);
      if (leapfrog) {
        S m = target_->stiffness(static_cast<Index>(b));
        S sm = rot_[b].scaled_m;
        // (h^2 m^2 / 8) (|x_l|^2 - |x_0|^2) in factored form
        energy_err += (hh * m * m / S(8)) * s *
                      ((v2_[b] / (sm * sm) - x2_[b]) * s + S(2) * c * xv_[b] / sm);
      }
    }
    if (leapfrog) dh.push_back(energy_err);
  }

  void ensure_range(Index lo, Index hi) {
    while (n_fw_ <= hi) {
      append_node(n_fw_, trig_fw_, dh_fw_);
      ++n_fw_;
    }
    while (-n_bk_ > lo) {
      append_node(-(n_bk_ + 1), trig_bk_, dh_bk_);
      ++n_bk_;
    }
  }

  const S* trig_row(Index l) const {
    const std::size_t stride = 2 * n_blocks_;
    if (l >= 0) return trig_fw_.data() + static_cast<std::size_t>(l) * stride;
    return trig_bk_.data() + static_cast<std::size_t>(-l - 1) * stride;
  }

  S cached_dh(Index l) const {
    if (params_.kind != FlowKind::leapfrog) return S(0);
    if (l >= 0) return dh_fw_[static_cast<std::size_t>(l)];
    return dh_bk_[static_cast<std::size_t>(-l - 1)];
  }

  // min of the two endpoint dot products between indices a <= b, assembled
  // from the per-block invariants.
  S diagnostic(Index a, Index b) const {
    const S* ra = trig_row(a);
    const S* rb = trig_row(b);
    S dot_minus = 0, dot_plus = 0;
    for (std::size_t q = 0; q < n_blocks_; ++q) {
      S ca = ra[2 * q], sa = ra[2 * q + 1];
      S cb = rb[2 * q], sb = rb[2 * q + 1];
      S sm = rot_[q].scaled_m;
      S dc = cb - ca, ds = sb - sa;
      dot_plus += -sb * dc * sm * x2_[q] + (cb * dc - sb * ds) * xv_[q] +
                  cb * ds / sm * v2_[q];
      dot_minus += -sa * dc * sm * x2_[q] + (ca * dc - sa * ds) * xv_[q] +
                   ca * ds / sm * v2_[q];
    }
    return std::min(dot_minus, dot_plus);
  }

  // Dyadic halving family of the extension, coarsest level first, singletons
  // skipped (their diagnostic is exactly zero).  Early exit is safe: the
  // result is a disjunction.
  bool extension_has_sub_uturn(Index lo, Index hi) const {
    for (Index sub_len = hi - lo + 1; sub_len >= 2; sub_len /= 2) {
      for (Index start = lo; start <= hi; start += sub_len) {
        if (diagnostic(start, start + sub_len - 1) < S(0)) return true;
      }
    }
    return false;
  }

  const ScaleBlockTarget<S>* target_;
  OrbitParams<S> params_;
  std::vector<detail::BlockRotation<S>> rot_;
  std::size_t n_blocks_ = 0;

  std::vector<S> x2_, v2_, xv_;
  std::vector<S> trig_fw_, trig_bk_;
  std::vector<S> dh_fw_, dh_bk_;
  Index n_fw_ = 0, n_bk_ = 0;
  OrbitTrace<S> trace_;
  mutable std::vector<S> log_w_;
};

template <typename S>
OrbitTrace<S> build_orbit(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                          const OrbitParams<S>& params, RngStream& rng) {
  NutsSampler<S> sampler(target, params);
  OrbitTrace<S> trace;
  sampler.build_orbit(p, rng, trace);
  return trace;
}

template <typename S>
Index select_index(const ScaleBlockTarget<S>& target, const OrbitParams<S>& params,
                   const OrbitTrace<S>& trace, RngStream& rng) {
  NutsSampler<S> sampler(target, params);
  return sampler.select_index(trace, rng);
}

template <typename S>
Vec<S> nuts_transition(const ScaleBlockTarget<S>& target, const Vec<S>& x,
                       const OrbitParams<S>& params, RngStream& rng) {
  NutsSampler<S> sampler(target, params);
  Vec<S> pos = x;
  sampler.step(pos, rng);
  return pos;
}

// Probability of the uniformization event for the given orbit started at p:
// |I| min_i w_i / sum_i w_i with w_i = exp(-(H(state at i) - H(p))).  Equals
// one for the exact flow.
template <typename S>
S uniform_part_probability(const ScaleBlockTarget<S>& target, const PhasePoint<S>& p,
                           const IndexOrbit& orbit, const FlowVariant<S>& flow) {
  if (flow.kind == FlowKind::exact) return S(1);
  OrbitParams<S> params(flow.step, 30, flow.kind);
  NutsSampler<S> sampler(target, params);
  std::vector<S> dh;
  sampler.energy_errors(p, orbit, dh);
  std::vector<S> log_w(dh.size());
  for (std::size_t i = 0; i < dh.size(); ++i) log_w[i] = -dh[i];
  return detail::uniform_part_from_log_weights(log_w);
}

}  // namespace uturnlab

#endif
