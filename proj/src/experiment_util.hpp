#ifndef UTURNLAB_SRC_EXPERIMENT_UTIL_HPP
#define UTURNLAB_SRC_EXPERIMENT_UTIL_HPP

#include <chrono>
#include <vector>

#include "uturnlab/lab/experiments.hpp"
#include "uturnlab/rng.hpp"
#include "uturnlab/stats.hpp"
#include "uturnlab/target.hpp"
#include "uturnlab/types.hpp"

namespace uturnlab::lab {

inline Vec<double> start_position(const ScaleBlockTarget<double>& target, StartKind kind,
                                  RngStream& rng) {
  switch (kind) {
    case StartKind::zero:
      return Vec<double>::Zero(target.dim());
    case StartKind::overdispersed:
      return 3.0 * sample_phase_point(target, rng).x;
    default:
      return sample_phase_point(target, rng).x;
  }
}

// Whitened squared radius |sqrt(m_i) x^i|^2 per block.
inline std::vector<double> block_radii(const ScaleBlockTarget<double>& target,
                                       const Vec<double>& x) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(target.num_blocks()));
  for (Index i = 0; i < target.num_blocks(); ++i)
    out.push_back(target.stiffness(i) * target.block_segment(x, i).squaredNorm());
  return out;
}

// Number of work chunks for draw-indexed loops: fixed by the draw count so
// results do not depend on the worker count.
inline std::int64_t chunk_count(std::int64_t n) {
  return std::min<std::int64_t>(n, 64);
}

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    auto d = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double, std::milli>(d).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace uturnlab::lab

#endif
