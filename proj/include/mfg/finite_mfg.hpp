#pragma once

#include <vector>

#include "mfg/hjsolver.hpp"

namespace mfg {

/// A population of agents over one horizon: node marginals per time node,
/// half-lattice marginals of the per-step move midpoints, and the part of
/// the expected cost that does not depend on anyone's beliefs (kinetic cost
/// plus static potential along the moves plus the terminal payment).
/// Everything here is linear in the underlying path distribution, so
/// populations mix by mixing these fields.
struct FlowPath {
  double T = 0;
  double dt = 0;
  std::vector<GridMeasure> marginals;          // size K + 1
  std::vector<std::vector<double>> midpoints;  // size K, half-lattice masses
  double base_cost = 0;
};

/// Population that stays put at its initial distribution.
FlowPath resting_flow(const TonelliModel& model, const GridMeasure& m0,
                      const ValueField& u_f, double T, double dt);

struct BestResponse {
  FlowPath flow;                    // optimal flow against the population
  std::vector<ValueField> slices;   // value function per time node
  std::vector<StepRecord> records;  // optimal successors, with ties
  double exploitability = 0;        // population cost minus the optimum
};

/// Solves the backward value problem in the cost field generated by the
/// population's marginals, rolls the optimal flow forward from the
/// population's initial measure (mass splits equally across tied
/// successors), and reports how much the population overpays relative to
/// that optimum in its own field. The excess is nonnegative up to roundoff.
BestResponse best_response(const TonelliModel& model, const Coupling& coupling,
                           const FlowPath& population, const ValueField& u_f,
                           double speed_cap = 5.0, int threads = 1);

/// Equilibrium candidate over one horizon: measure path, value slices
/// computed against that same path, the optimal-successor field, and the
/// exploitability history of the iteration that produced it.
struct MildSolutionPath {
  double T = 0;
  double dt = 0;
  std::vector<ValueField> slices;
  std::vector<GridMeasure> marginals;
  std::vector<StepRecord> records;
  std::vector<double> exploitability_trace;
  double exploitability = 0;
  bool converged = false;
};

struct FictitiousPlayOptions {
  double tol_expl = 1e-3;
  int max_outer = 2000;
  bool raw_best_response = false;  // adopt each response outright instead of averaging
  double speed_cap = 5.0;
  int threads = 1;
  bool throw_on_failure = false;
};

/// Fictitious play: repeatedly best-respond to the averaged population and
/// fold the response in with weight 1/(k+1). The first response replaces
/// the starting population entirely. Stops once the population's
/// exploitability drops below tol_expl; hitting max_outer is reported via
/// the converged flag (or NoConvergence when throwing is requested).
MildSolutionPath equilibrium_fixed_point(const TonelliModel& model,
                                         const Coupling& coupling,
                                         const GridMeasure& m0,
                                         const ValueField& u_f, double T,
                                         double dt,
                                         const FictitiousPlayOptions& opts = {});

/// Time integral of the coupling-difference pairing against the measure
/// difference, relative to a stationary crowd. Stays bounded uniformly in
/// the horizon for monotone couplings.
double energy_estimate_eval(const MildSolutionPath& path,
                            const Coupling& coupling,
                            const GridMeasure& m_bar);

}  // namespace mfg
