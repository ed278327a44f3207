#ifndef UTURNLAB_TARGET_HPP
#define UTURNLAB_TARGET_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "uturnlab/rng.hpp"
#include "uturnlab/types.hpp"

namespace uturnlab {

template <typename S>
struct ScaleBlock {
  S stiffness;  // inverse variance, > 0
  Index dim;    // multiplicity, >= 1
};

// Diagonal Gaussian target N(0, C) with C = diag(1/m_i) in blocks: a list of
// (stiffness m_i, multiplicity d_i) pairs sorted by ascending stiffness.
// Immutable after construction and safe to share across threads.
template <typename S>
class ScaleBlockTarget {
 public:
  explicit ScaleBlockTarget(std::vector<ScaleBlock<S>> blocks) {
    if (blocks.empty()) throw std::invalid_argument("target: no blocks");
    for (const auto& b : blocks) {
      if (!(b.stiffness > S(0)) || !std::isfinite(static_cast<double>(b.stiffness)))
        throw std::invalid_argument("target: stiffness must be positive");
      if (b.dim < 1) throw std::invalid_argument("target: block dim must be >= 1");
    }
    std::stable_sort(blocks.begin(), blocks.end(),
                     [](const auto& a, const auto& b) { return a.stiffness < b.stiffness; });
    for (const auto& b : blocks) {
      if (!blocks_.empty() && blocks_.back().stiffness == b.stiffness) {
        blocks_.back().dim += b.dim;
      } else {
        blocks_.push_back(b);
      }
    }
    offsets_.reserve(blocks_.size() + 1);
    Index off = 0;
    for (const auto& b : blocks_) {
      offsets_.push_back(off);
      off += b.dim;
    }
    offsets_.push_back(off);
  }

  static ScaleBlockTarget isotropic(S m, Index d) {
    return ScaleBlockTarget({{m, d}});
  }

  // Two isotropic factors with 0 < m1 <= m2; equal stiffnesses merge.
  static ScaleBlockTarget two_scale(S m1, S m2, Index d1, Index d2) {
    if (!(m1 > S(0)) || !(m2 > S(0)))
      throw std::invalid_argument("two_scale: stiffness must be positive");
    if (m2 < m1) throw std::invalid_argument("two_scale: requires m1 <= m2");
    return ScaleBlockTarget({{m1, d1}, {m2, d2}});
  }

  // Surrogate chain spectrum: variances i^{-2}, i.e. blocks (i^2, 1).
  static ScaleBlockTarget harmonic_chain(Index d) {
    if (d < 1) throw std::invalid_argument("harmonic_chain: d must be >= 1");
    std::vector<ScaleBlock<S>> blocks;
    blocks.reserve(static_cast<std::size_t>(d));
    for (Index i = 1; i <= d; ++i)
      blocks.push_back({static_cast<S>(i) * static_cast<S>(i), 1});
    return ScaleBlockTarget(std::move(blocks));
  }

  const std::vector<ScaleBlock<S>>& blocks() const { return blocks_; }
  Index num_blocks() const { return static_cast<Index>(blocks_.size()); }
  Index dim() const { return offsets_.back(); }
  Index block_offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  S stiffness(Index i) const { return blocks_[static_cast<std::size_t>(i)].stiffness; }
  Index block_dim(Index i) const { return blocks_[static_cast<std::size_t>(i)].dim; }
  S max_stiffness() const { return blocks_.back().stiffness; }
  S min_stiffness() const { return blocks_.front().stiffness; }

  // tr(C) = sum d_i / m_i
  S trace_cov() const {
    S t = 0;
    for (const auto& b : blocks_) t += static_cast<S>(b.dim) / b.stiffness;
    return t;
  }

  // tr(C^{1/2}) = sum d_i / sqrt(m_i)
  S trace_sqrt_cov() const {
    S t = 0;
    for (const auto& b : blocks_) t += static_cast<S>(b.dim) / std::sqrt(b.stiffness);
    return t;
  }

  S condition_number() const { return max_stiffness() / min_stiffness(); }

  // d2/d1 for two-block targets.
  S dim_ratio() const {
    if (blocks_.size() != 2)
      throw std::logic_error("dim_ratio: target does not have exactly two blocks");
    return static_cast<S>(blocks_[1].dim) / static_cast<S>(blocks_[0].dim);
  }

  // View of the block's coordinates within a full-dimension vector.
  auto block_segment(const Vec<S>& w, Index i) const {
    return w.segment(block_offset(i), block_dim(i));
  }

 private:
  std::vector<ScaleBlock<S>> blocks_;
  std::vector<Index> offsets_;
};

// Norm adapted to the block geometry: |x|^2 = sum_i m_i |x^i|^2.
template <typename S>
S two_scale_norm(const ScaleBlockTarget<S>& target, const Vec<S>& x) {
  if (x.size() != target.dim())
    throw std::invalid_argument("two_scale_norm: dimension mismatch");
  S sq = 0;
  for (Index i = 0; i < target.num_blocks(); ++i)
    sq += target.stiffness(i) * target.block_segment(x, i).squaredNorm();
  return std::sqrt(sq);
}

// Stationary draw (x, v) with x_j ~ N(0, 1/m(j)) and v_j ~ N(0, 1).
template <typename S>
PhasePoint<S> sample_phase_point(const ScaleBlockTarget<S>& target, RngStream& rng) {
  PhasePoint<S> p;
  p.x.resize(target.dim());
  for (Index i = 0; i < target.num_blocks(); ++i) {
    S scale = S(1) / std::sqrt(target.stiffness(i));
    Index off = target.block_offset(i);
    for (Index j = 0; j < target.block_dim(i); ++j)
      p.x[off + j] = scale * static_cast<S>(rng.gaussian());
  }
  p.v = rng.gaussian_vector<S>(target.dim());
  return p;
}

// Per-block position shell half-widths alpha and velocity bounds r.  The
// probability bounds assume alpha_i, r_i <= d_i; larger values are allowed
// but flagged by within_probability_regime().
template <typename S>
struct ShellSpec {
  std::vector<S> alpha;
  std::vector<S> r;

  // alpha_i = r_i = min(c sqrt(d_i), d_i)
  static ShellSpec scaled(const ScaleBlockTarget<S>& target, S c) {
    if (c < S(0)) throw std::invalid_argument("shell: scale must be nonnegative");
    ShellSpec spec;
    for (Index i = 0; i < target.num_blocks(); ++i) {
      S d = static_cast<S>(target.block_dim(i));
      S a = std::min(c * std::sqrt(d), d);
      spec.alpha.push_back(a);
      spec.r.push_back(a);
    }
    return spec;
  }

  bool matches(const ScaleBlockTarget<S>& target) const {
    return static_cast<Index>(alpha.size()) == target.num_blocks() &&
           static_cast<Index>(r.size()) == target.num_blocks();
  }

  bool within_probability_regime(const ScaleBlockTarget<S>& target) const {
    for (Index i = 0; i < target.num_blocks(); ++i) {
      S d = static_cast<S>(target.block_dim(i));
      if (alpha[static_cast<std::size_t>(i)] > d || r[static_cast<std::size_t>(i)] > d)
        return false;
    }
    return true;
  }
};

// Default shell scale: alpha_i = r_i = 3 sqrt(d_i).
template <typename S>
ShellSpec<S> default_shell(const ScaleBlockTarget<S>& target) {
  return ShellSpec<S>::scaled(target, S(3));
}

// x lies in the product of whitened spherical shells:
// | |sqrt(m_i) x^i|^2 - d_i | <= alpha_i for every block.
template <typename S>
bool in_position_shell(const ScaleBlockTarget<S>& target, const Vec<S>& x,
                       const ShellSpec<S>& shell) {
  if (x.size() != target.dim() || !shell.matches(target))
    throw std::invalid_argument("in_position_shell: dimension mismatch");
  for (Index i = 0; i < target.num_blocks(); ++i) {
    S radial = target.stiffness(i) * target.block_segment(x, i).squaredNorm();
    if (std::abs(radial - static_cast<S>(target.block_dim(i))) >
        shell.alpha[static_cast<std::size_t>(i)])
      return false;
  }
  return true;
}

// v lies in the velocity set relative to the given x: per block,
// max(| |v^i|^2 - d_i |, | sqrt(m_i) x^i . v^i |) <= r_i.
template <typename S>
bool in_velocity_set(const ScaleBlockTarget<S>& target, const Vec<S>& x,
                     const Vec<S>& v, const ShellSpec<S>& shell) {
  if (x.size() != target.dim() || v.size() != target.dim() || !shell.matches(target))
    throw std::invalid_argument("in_velocity_set: dimension mismatch");
  for (Index i = 0; i < target.num_blocks(); ++i) {
    auto xi = target.block_segment(x, i);
    auto vi = target.block_segment(v, i);
    S radial = std::abs(vi.squaredNorm() - static_cast<S>(target.block_dim(i)));
    S cross = std::sqrt(target.stiffness(i)) * std::abs(xi.dot(vi));
    if (std::max(radial, cross) > shell.r[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

// Shell growth schedule alpha(n)_i = max(alpha0_i, r_i) + n (r_i + hbar^2 m_i d_i),
// used to monitor shell exits over n transitions.
template <typename S>
ShellSpec<S> shell_growth(const ShellSpec<S>& shell0, const std::vector<S>& r,
                          S hbar, Index n, const ScaleBlockTarget<S>& target) {
  if (n < 0) throw std::invalid_argument("shell_growth: n must be >= 0");
  if (!shell0.matches(target) || static_cast<Index>(r.size()) != target.num_blocks())
    throw std::invalid_argument("shell_growth: dimension mismatch");
  ShellSpec<S> grown;
  for (Index i = 0; i < target.num_blocks(); ++i) {
    auto k = static_cast<std::size_t>(i);
    S md = target.stiffness(i) * static_cast<S>(target.block_dim(i));
    S a = std::max(shell0.alpha[k], r[k]) + static_cast<S>(n) * (r[k] + hbar * hbar * md);
    grown.alpha.push_back(a);
    grown.r.push_back(r[k]);
  }
  return grown;
}

}  // namespace uturnlab

#endif
