#pragma once

#include <vector>

#include "mfg/mather.hpp"

namespace mfg {

/// One application of the equilibrium map: freeze the crowd m, minimize the
/// coupled rest cost, return the measure carried by the minimizers (uniform
/// over the argmin nodes, or a single atom when lipschitz_selection is set,
/// using the first argmin node in id order).
GridMeasure psi_map(const TonelliModel& model, const Coupling& coupling,
                    const GridMeasure& m, double tol_static = -1.0,
                    bool lipschitz_selection = false);

struct ErgodicMfgOptions {
  double damping = 0.5;    // weight of the map output in each update
  double tol = 1e-3;       // stop when consecutive measures are this close
  int max_iter = 200;
  double tol_static = -1;  // forwarded to the static minimization
  bool lipschitz_selection = false;
  int tail_window = 32;    // trailing iterates averaged into the answer
  double dt = -1;          // value-solve step; < 0 picks 4 sqrt(h)
  double ergodic_tol = 1e-8;
  int ergodic_max_iter = 200000;
  double speed_cap = 5.0;
  int threads = 1;
  double support_cut = 1e-4;  // mass below this does not count as support
  bool throw_on_failure = false;
};

/// Pass/fail summary of the stationary equilibrium conditions: the value
/// equation residual, vanishing velocity on the crowd support, the fixed
/// point gap of the equilibrium map, and the continuity-equation pairing
/// against a basis of interior bump functions.
struct ErgodicMfgCertificate {
  double hj_residual = 0;
  bool hj_ok = false;
  double support_speed = 0;
  bool speed_ok = false;
  double fixed_point_gap = 0;
  bool fixed_point_ok = false;
  double continuity_residual = 0;
  bool continuity_ok = false;
};

struct ErgodicMfgSolution {
  double lambda_bar = 0;
  ValueField u_bar;
  GridMeasure m_bar;
  double fixed_point_residual = 0;   // d1(m_bar, psi(m_bar))
  double stationarity_residual = 0;  // worst bump-basis pairing
  std::vector<double> d1_trace;      // per-iteration step sizes
  int iterations = 0;
  bool converged = false;
  ErgodicSolution value_solution;
  ErgodicMfgCertificate certificate;
};

/// Damped fixed-point iteration m <- m + damping (psi(m) - m). The map
/// returns atomic measures whose support cells can oscillate when the
/// continuum equilibrium sits between lattice points, so the reported
/// measure is the average of the trailing tail_window iterates; the step
/// size then measures distance to that oscillation floor rather than to an
/// exact atomic fixed point, and failing to reach tol is reported, not
/// masked.
ErgodicMfgSolution solve_ergodic_mfg(const TonelliModel& model,
                                     const Coupling& coupling,
                                     const GridMeasure& m_init,
                                     const ErgodicMfgOptions& opts = {});

/// Discrepancies between two equilibria of the same coupled model: the sup
/// gap of the coupling fields and the gap of the critical constants. For a
/// monotone coupling both must be small even when the measures differ.
struct UniquenessGaps {
  double coupling_gap = 0;
  double lambda_gap = 0;
};

UniquenessGaps uniqueness_check(const ErgodicMfgSolution& a,
                                const ErgodicMfgSolution& b,
                                const Coupling& coupling);

}  // namespace mfg
