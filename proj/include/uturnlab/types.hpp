#ifndef UTURNLAB_TYPES_HPP
#define UTURNLAB_TYPES_HPP

#include <cstdint>

#include <Eigen/Dense>

namespace uturnlab {

template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Index = std::int64_t;

// Position/velocity pair of equal dimension.
template <typename S>
struct PhasePoint {
  Vec<S> x;
  Vec<S> v;

  Index dim() const { return x.size(); }
};

}  // namespace uturnlab

#endif
