#ifndef UTURNLAB_LAB_PREDICTOR_HPP
#define UTURNLAB_LAB_PREDICTOR_HPP

#include <vector>

#include "uturnlab/target.hpp"
#include "uturnlab/types.hpp"

namespace uturnlab::lab {

// First length in the dyadic menu {h (2^k - 1) : 1 <= k <= k_max} where the
// uniform term is negative, capped at the menu maximum.
struct OrbitLengthPrediction {
  double t_star;
  int k_star;
  bool capped;
};

OrbitLengthPrediction critical_orbit_length(const ScaleBlockTarget<double>& target,
                                            double h, int k_max, double hbar);

// First positive time where the uniform term turns negative, independent of
// any grid (exact flow, hbar = 0).  Used to size step-size heuristics.
double continuous_critical_time(const ScaleBlockTarget<double>& target);

// Menu lengths whose uniform-term value falls inside the forbidden band
// [-delta, delta).
struct SelectionCondition {
  bool ok;
  struct Offender {
    int k;
    double t;
    double f_unif;
  };
  std::vector<Offender> offenders;
};

SelectionCondition check_selection_condition(const ScaleBlockTarget<double>& target,
                                             double h, int k_max, double hbar,
                                             double delta);

// Accelerated-phase membership for a two-scale family described by the
// condition number kappa and the dimension ratio d2/d1.  For kappa >= 4 the
// criterion is min over (0, 2 pi) of
//   g(t) = sin(kappa^{-1/2} t) + sin(t) kappa^{-1/2} ratio  >=  0;
// for kappa < 4 the fast oscillation's first period extends past the slow
// term's first root, where negativity reflects an ordinary critical-length
// U-turn rather than short-orbit trapping, so every ratio is accelerated.
struct PhaseResult {
  bool accelerated;
  bool boundary;   // the scanned minimum sits at zero within tolerance
  double min_g;    // minimum of g over (0, 2 pi)
  double argmin_t;
};

PhaseResult phase_membership(double kappa, double ratio);

// a = inf{q > 0 : q sin t + t = 0 for some t in (0, 2 pi)}, the asymptotic
// phase-boundary ratio, computed as the minimum of -t / sin t over (pi, 2 pi).
double phase_boundary_constant();

// Smallest ratio at which (kappa, ratio) leaves the accelerated phase;
// requires kappa >= 4.
double phase_boundary_ratio(double kappa);

}  // namespace uturnlab::lab

#endif
