#ifndef UTURNLAB_RNG_HPP
#define UTURNLAB_RNG_HPP

#include <cmath>
#include <cstdint>

#include "uturnlab/types.hpp"

namespace uturnlab {

// SplitMix64 finalizer (Steele, Lea & Flood; Vigna's fixed-increment variant).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

// Counter-based random stream.  The state is a plain 64-bit counter advanced
// by the golden-ratio increment; each output is the SplitMix64 hash of the
// counter.  Substreams are derived by hashing (master seed, task index), so a
// stream's draws depend only on its task index, never on scheduling order or
// worker count.
class RngStream {
 public:
  static constexpr std::uint64_t kGamma = UINT64_C(0x9E3779B97F4A7C15);

  explicit RngStream(std::uint64_t seed) : state_(mix64(seed + kGamma)) {}

  static RngStream substream(std::uint64_t master_seed, std::uint64_t task) {
    return RngStream(master_seed ^ mix64((task + 1) * kGamma));
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform on (0, 1].
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  bool coin() { return (next_u64() >> 63) != 0; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Multiply-shift; bias is negligible for the n used here (n << 2^32).
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  template <typename S>
  Vec<S> gaussian_vector(Index n) {
    Vec<S> out(n);
    for (Index i = 0; i < n; ++i) out[i] = static_cast<S>(gaussian());
    return out;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace uturnlab

#endif
