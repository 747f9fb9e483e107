#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mfg/errors.hpp"
#include "mfg/finite_mfg.hpp"
#include "mfg/geometry.hpp"
#include "mfg/model.hpp"

using namespace mfg;

namespace {

TonelliModel quad_model(const Domain& dom) {
  PotentialSpec spec(1);
  spec[0] = {PotentialTerm::Kind::quadratic, {0, 0}, 0.5, 1.0};
  return make_kinetic_model(dom, spec);
}

ValueField zero_field(const Grid& grid) {
  return {&grid, std::vector<double>(static_cast<size_t>(grid.size()), 0.0)};
}

}  // namespace

TEST_CASE("a resting population pays its stage cost in place") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  const double dt = grid.spacing();
  const double T = 8 * dt;

  GridMeasure m0 = GridMeasure::dirac_at(grid, {0.5, 0});
  FlowPath rest = resting_flow(model, m0, zero_field(grid), T, dt);
  CHECK(rest.marginals.size() == 9);
  CHECK(rest.midpoints.size() == 8);
  for (const auto& m : rest.marginals) {
    CHECK(m.weight(m0.support()[0]) == 1.0);
  }
  // Base cost is T times the potential at the resting point.
  const double w = model.L({0.5, 0}, {0, 0});
  CHECK(rest.base_cost == doctest::Approx(T * w).epsilon(1e-12));
}

TEST_CASE("the best response never loses to the population it answers") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(0.5, 1.0, true);
  const double dt = grid.spacing();
  const double T = 80 * dt;

  // Over a long enough horizon, sitting on a hillside inside one's own
  // crowd is clearly beatable; over a very short one the kinetic price of
  // leaving exceeds every saving and resting is already optimal.
  GridMeasure m0 = GridMeasure::dirac_at(grid, {0.5, 0});
  FlowPath rest = resting_flow(model, m0, zero_field(grid), T, dt);
  BestResponse br = best_response(model, cpl, rest, zero_field(grid));
  CHECK(br.exploitability >= -1e-12);
  CHECK(br.exploitability > 0.1);
  CHECK(br.slices.size() == 81);
  CHECK(br.records.size() == 80);
  CHECK(br.flow.marginals.size() == 81);

  FlowPath short_rest = resting_flow(model, m0, zero_field(grid), 4 * dt, dt);
  BestResponse short_br = best_response(model, cpl, short_rest, zero_field(grid));
  CHECK(std::abs(short_br.exploitability) <= 1e-12);

  // Mass is conserved along the rolled-out flow.
  for (const auto& m : br.flow.marginals) {
    double mass = 0;
    for (double x : m.weights()) mass += x;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }

  // The raw response is a new concentrated crowd and as a population is
  // exploitable in its own right; the gap stays nonnegative either way.
  BestResponse again = best_response(model, cpl, br.flow, zero_field(grid));
  CHECK(again.exploitability >= -1e-12);
  CHECK(again.exploitability > 0.1);
}

TEST_CASE("horizon must be an integer number of steps") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  GridMeasure m0 = GridMeasure::uniform(grid);
  CHECK_THROWS_AS((void)resting_flow(model, m0, zero_field(grid), 1.0, 0.3),
                  IncompatibleResolution);
}

TEST_CASE("the first round replaces the belief outright") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(0.5, 1.0, true);
  const double dt = grid.spacing();
  const double T = 10 * dt;
  GridMeasure m0 = GridMeasure::dirac_at(grid, {0.5, 0});

  FictitiousPlayOptions one;
  one.max_outer = 1;
  MildSolutionPath after_one =
      equilibrium_fixed_point(model, cpl, m0, zero_field(grid), T, dt, one);

  // One round of play equals the raw best response to the resting start:
  // the initial belief carries weight zero afterwards.
  FlowPath rest = resting_flow(model, m0, zero_field(grid), T, dt);
  BestResponse br = best_response(model, cpl, rest, zero_field(grid));
  for (size_t k = 0; k < after_one.marginals.size(); ++k) {
    CHECK(after_one.marginals[k].weights() == br.flow.marginals[k].weights());
  }
}

TEST_CASE("short-horizon play converges and the trace decays") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(0.5, 1.0, true);
  const double dt = 2 * grid.spacing();
  const double T = 2.0;
  GridMeasure m0 = GridMeasure::uniform(grid);

  FictitiousPlayOptions opts;
  opts.tol_expl = 5e-3;
  MildSolutionPath path =
      equilibrium_fixed_point(model, cpl, m0, zero_field(grid), T, dt, opts);
  CHECK(path.converged);
  CHECK(path.exploitability <= 5e-3);
  CHECK(path.exploitability_trace.size() >= 2);
  CHECK(path.exploitability_trace.back() == path.exploitability);
  // The averaged trace must fall well below its starting level.
  CHECK(path.exploitability_trace.back() <
        0.25 * path.exploitability_trace.front());

  // The returned marginals start at the prescribed initial crowd.
  CHECK(path.marginals.front().weights() == m0.weights());
  CHECK(path.slices.size() == path.marginals.size());
}

TEST_CASE("raw responses oscillate where averaging settles") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(0.5, 4.0, true);
  const double dt = 2 * grid.spacing();
  const double T = 1.0;
  GridMeasure m0 = GridMeasure::dirac_at(grid, {0, 0});

  FictitiousPlayOptions raw;
  raw.raw_best_response = true;
  raw.tol_expl = 1e-6;
  raw.max_outer = 60;
  MildSolutionPath churn =
      equilibrium_fixed_point(model, cpl, m0, zero_field(grid), T, dt, raw);
  CHECK(!churn.converged);

  FictitiousPlayOptions avg;
  avg.tol_expl = 1e-2;
  MildSolutionPath calm =
      equilibrium_fixed_point(model, cpl, m0, zero_field(grid), T, dt, avg);
  CHECK(calm.converged);
  CHECK(calm.exploitability <= 1e-2);
}

TEST_CASE("failure to converge can throw on request") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(0.5, 1.0, true);
  FictitiousPlayOptions opts;
  opts.tol_expl = 1e-12;
  opts.max_outer = 3;
  opts.throw_on_failure = true;
  CHECK_THROWS_AS((void)equilibrium_fixed_point(
                      model, cpl, GridMeasure::uniform(grid), zero_field(grid),
                      2.0, grid.spacing(), opts),
                  NoConvergence);
}

TEST_CASE("energy pairing vanishes for a crowd already at rest") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(0.5, 1.0, true);
  const double dt = grid.spacing();
  const double T = 10 * dt;

  GridMeasure m_bar = GridMeasure::dirac_at(grid, {0, 0});
  FictitiousPlayOptions opts;
  opts.tol_expl = 1e-3;
  MildSolutionPath path =
      equilibrium_fixed_point(model, cpl, m_bar, zero_field(grid), T, dt, opts);

  // Pairing the path against itself at every time gives zero; against the
  // stationary reference it is nonnegative for the monotone kernel.
  const double e_self = energy_estimate_eval(path, cpl, path.marginals.front());
  const double e_rest = energy_estimate_eval(path, cpl, m_bar);
  CHECK(e_rest >= -1e-12);
  CHECK(e_self >= -1e-12);

  // A crowd pinned far from the reference pays a visible energy.
  MildSolutionPath moved = path;
  const double e_far =
      energy_estimate_eval(moved, cpl, GridMeasure::dirac_at(grid, {0.9, 0}));
  CHECK(e_far > e_rest);
}

TEST_CASE("measures on different grids are rejected") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  Grid other = Grid::make(dom, 41);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(0.5, 1.0, true);
  CHECK_THROWS_AS((void)equilibrium_fixed_point(
                      model, cpl, GridMeasure::uniform(other), zero_field(grid),
                      0.5, grid.spacing()),
                  GridMismatch);
}
