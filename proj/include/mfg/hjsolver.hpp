#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// Scalar field sampled on grid nodes.
struct ValueField {
  const Grid* grid = nullptr;
  std::vector<double> values;

  double operator[](int id) const { return values[static_cast<size_t>(id)]; }
  double max_abs() const;
  double oscillation() const;  // max - min
};

/// Argmin bookkeeping of one dynamic-programming step. `best` holds the
/// partner node chosen under the deterministic tie-break (smallest jump,
/// then smallest node id); the tie arrays list every partner whose cost is
/// within the tie tolerance, in the same deterministic order.
struct StepRecord {
  std::vector<int> best;
  std::vector<int> tie_offsets;  // size n + 1, prefix offsets into tie_nodes
  std::vector<int> tie_nodes;

  bool has_ties() const { return !tie_offsets.empty(); }
  std::pair<const int*, const int*> ties(int id) const {
    return {tie_nodes.data() + tie_offsets[static_cast<size_t>(id)],
            tie_nodes.data() + tie_offsets[static_cast<size_t>(id) + 1]};
  }
};

struct LaxOleinikResult {
  ValueField updated;
  StepRecord record;
};

/// One backward step of the discrete evolution operator:
///   (T u)(x) = min over nodes y with |y - x| <= speed_cap * dt of
///              u(y) + dt * L(midpoint(x, y), (x - y) / dt).
/// Throws IncompatibleResolution when the reachable radius is below the
/// spacing, so no jump is admissible.
LaxOleinikResult lax_oleinik_step(const TonelliModel& model, const Grid& grid,
                                  const ValueField& u, double dt,
                                  double speed_cap = 5.0,
                                  bool record_ties = false, int threads = 1);

/// Solution of the stationary problem: u is the fixed point of the evolution
/// operator shifted by the critical constant, pinned to zero at the
/// reference node. residual is the sup norm of T u + c dt - u with the
/// reported c.
struct ErgodicSolution {
  ValueField u;
  double c = 0;
  double residual = 0;
  int iterations = 0;
  double dt = 0;
  bool converged = false;
  StepRecord record;  // argmin partners of the final verification step
};

struct ErgodicOptions {
  double tol = 1e-8;          // stop when the step residual <= tol * dt
  int max_iter = 200000;
  double speed_cap = 5.0;
  int threads = 1;
  int ref_node = -1;          // < 0: node nearest the centroid
  bool throw_on_failure = true;
  std::optional<ValueField> warm_start;
  int warm_iteration = 0;
};

/// Value iteration for the critical constant and a stationary profile.
/// Each sweep applies the evolution operator, reads the drift at the
/// reference node, renormalises there, and stops when consecutive profiles
/// agree within tol * dt. A converged run reports the final sweep's drift
/// as the constant; a run that exhausts its budget reports the average
/// over the last 50 sweeps instead.
ErgodicSolution ergodic_solve(const TonelliModel& model, const Grid& grid,
                              double dt, const ErgodicOptions& opts = {});

/// Backward solve over [0, T] with a time-dependent running cost
/// L + F(., m_path[k]) on step k and terminal datum u_f (kept bitwise in the
/// last slice). Returns one value field per time node and the per-step
/// argmin partners for trajectory extraction; kappas holds the per-step
/// normalisation constants (zero unless the coupling normalises).
struct FiniteHorizonResult {
  std::vector<ValueField> slices;      // size K + 1, slices[K] == u_f
  std::vector<StepRecord> records;     // size K, records[k] maps t_k -> t_{k+1}
  std::vector<double> kappas;          // size K
};

FiniteHorizonResult finite_horizon_solve(const TonelliModel& model,
                                         const Coupling& coupling,
                                         const std::vector<GridMeasure>& m_path,
                                         const ValueField& u_f, double T,
                                         double dt, double speed_cap = 5.0,
                                         bool record_ties = false,
                                         int threads = 1);

/// Variant taking the coupling already evaluated on the half lattice, one
/// table per step. Callers that iterate against slowly changing populations
/// keep these tables up to date incrementally instead of re-evaluating the
/// kernel on every pass. An empty table list means no coupling.
FiniteHorizonResult finite_horizon_solve(
    const TonelliModel& model,
    const std::vector<std::vector<double>>& coupling_half, bool a3_normalize,
    const ValueField& u_f, double T, double dt, double speed_cap = 5.0,
    bool record_ties = false, int threads = 1);

/// Discrete trajectory following the recorded argmin partners backward from
/// start_node for the given horizon. nodes[0] is the earliest point and
/// nodes.back() == start_node. The defect measures how far the value fails
/// to balance accumulated cost plus the critical drift along the curve,
/// uniformly over subintervals.
struct CalibratedCurve {
  std::vector<int> nodes;
  double dt = 0;
  double defect = 0;
};

CalibratedCurve calibrated_curve(const TonelliModel& model, const Grid& grid,
                                 const ErgodicSolution& sol, int start_node,
                                 double horizon);

/// Central-difference gradient and the induced characteristic velocity
/// dH/dp(x, Du) at an interior node. Throws BoundaryNode on the boundary
/// layer.
struct GradientVelocity {
  Vec2 gradient;
  Vec2 velocity;
};

GradientVelocity gradient_and_velocity(const TonelliModel& model,
                                       const Grid& grid,
                                       const ValueField& u, int node);

/// One-sided boundary data at a boundary-layer node: the outward slope
/// lambda_plus, the tangential gradient, the assembled spatial gradient
/// p = D_tau u + lambda_plus * normal, and the defect |H(x, p) - c|.
/// Throws CornerNode at box corners and BoundaryNode at interior nodes.
struct BoundaryGradient {
  double lambda_plus = 0;
  Vec2 tangential;
  Vec2 p;
  Vec2 normal;
  double defect = 0;
};

BoundaryGradient boundary_gradient(const TonelliModel& model, const Grid& grid,
                                   const ValueField& u, int node, double c);

/// Largest centered second difference scaled by step^{3/2}, per probe step.
/// Bounded ratios across dyadic steps indicate the fractional one-sided
/// curvature bound; an upward kink makes the ratio diverge like step^{-1/2}.
struct SemiconcavityRatio {
  double step;
  double max_ratio;
};

std::vector<SemiconcavityRatio> semiconcavity_check(
    const Grid& grid, const ValueField& u,
    const std::vector<int>& step_multiples = {1, 2, 4, 8});

/// Binary state snapshot for long stationary runs (little-endian 64-bit
/// payload with a fixed-width header carrying the grid shape).
void save_checkpoint(const std::string& path, const Grid& grid,
                     const ValueField& u, int iteration, double c, double dt);

struct Checkpoint {
  int nx = 0, ny = 0, node_count = 0;
  int iteration = 0;
  double c = 0, dt = 0;
  std::vector<double> values;
};

Checkpoint load_checkpoint(const std::string& path);

/// Max slope between adjacent nodes, the discrete Lipschitz seminorm.
double max_adjacent_slope(const Grid& grid, const ValueField& u);

}  // namespace mfg
