#pragma once

#include <vector>

#include "mfg/hjsolver.hpp"

namespace mfg {

/// Static minimizers of the rest cost L(., 0) on the grid, the critical
/// value they determine, and the uniform measure carried by them.
struct MatherData {
  std::vector<int> nodes;   // grid ids within tol_static of the minimum
  double min_value = 0;
  double critical_value = 0;  // equals -min_value
  GridMeasure measure;        // uniform over nodes
  double padded_min = 0;      // minimum over the enlarged search box
  double tol_static = 0;
};

/// Capture tolerance for the static argmin. Scales like the third power of
/// the spacing: wide enough for exact ties and flat bottoms, narrow enough
/// that a neighbouring cell one quadratic increment away stays out.
double default_static_tolerance(const Grid& grid);

/// Locates the rest-cost minimizers on the grid. The minimum is also sought
/// over a box extending the domain bounds by twice the diameter (same
/// lattice spacing); when that search beats the in-domain minimum by more
/// than tol_static the true minimizer escapes the domain and
/// ConstraintQualificationFailed is thrown.
///
/// tol_static < 0 selects the default tolerance.
MatherData mather_set(const TonelliModel& model, const Grid& grid,
                      double tol_static = -1.0);

/// Diagnostics tying a static minimizer set to a converged stationary
/// value field.
struct MatherReport {
  double max_support_speed = 0;  // max |dH/dp(x, Du)| over support nodes
  bool speed_ok = false;
  bool lift_injective = false;   // x -> (x, velocity) one to one on support
  double max_pair_slope = 0;     // max |Du(x) - Du(y)| / |x - y| over pairs
  double k2 = 0;                 // admissible slope bound used
  bool lipschitz_ok = false;
  double action_excess = 0;      // max over support of L(x,0) + c
  bool action_ok = false;
};

/// Checks that the minimizing nodes behave like rest points of the
/// stationary solution: the discrete characteristic velocity vanishes up to
/// speed_tol, the gradient varies at most at slope k2 between support
/// nodes, and the rest action L(x,0) + c stays within tol_static.
/// speed_tol < 0 selects 10 grid spacings.
MatherReport mather_measure_check(const MatherData& data,
                                  const ErgodicSolution& sol,
                                  const TonelliModel& model,
                                  double speed_tol = -1.0);

}  // namespace mfg
