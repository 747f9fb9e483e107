#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mfg/ergodic_mfg.hpp"
#include "mfg/errors.hpp"
#include "mfg/geometry.hpp"
#include "mfg/model.hpp"

using namespace mfg;

namespace {

TonelliModel quad_model(const Domain& dom) {
  PotentialSpec spec(1);
  spec[0] = {PotentialTerm::Kind::quadratic, {0, 0}, 0.5, 1.0};
  return make_kinetic_model(dom, spec);
}

ErgodicMfgOptions tuned_options() {
  ErgodicMfgOptions o;
  o.damping = 0.1;
  o.tol = 3e-4;
  o.max_iter = 1500;
  return o;
}

}  // namespace

TEST_CASE("one application of the map flees a concentrated crowd") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(1.0, 1.0, true);

  // Against a point crowd at the origin the coupled rest cost is
  // 0.5 x^2 + exp(-x^2), minimised at x = +-sqrt(log 2) ~ 0.8326. The map
  // answers with the two nearest lattice cells, half mass each.
  GridMeasure out = psi_map(model, cpl, GridMeasure::dirac_at(grid, {0, 0}));
  auto support = out.support();
  REQUIRE(support.size() == 2);
  const double root = std::sqrt(std::log(2.0));
  CHECK(std::abs(grid.node(support[0]).x + root) <= grid.spacing());
  CHECK(std::abs(grid.node(support[1]).x - root) <= grid.spacing());
  CHECK(out.weight(support[0]) == 0.5);
  CHECK(out.weight(support[1]) == 0.5);

  // The single-valued selection keeps only the first argmin cell.
  GridMeasure picked =
      psi_map(model, cpl, GridMeasure::dirac_at(grid, {0, 0}), -1.0, true);
  CHECK(picked.support().size() == 1);
  CHECK(picked.support()[0] == support[0]);
}

TEST_CASE("damped iteration settles into a certified equilibrium") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(1.0, 1.0, true);

  ErgodicMfgSolution sol = solve_ergodic_mfg(model, cpl, GridMeasure::uniform(grid),
                                             tuned_options());
  const double h = grid.spacing();
  CHECK(sol.converged);
  CHECK(sol.iterations < 200);
  CHECK(sol.d1_trace.size() == static_cast<size_t>(sol.iterations));

  // Normalised coupled cost has minimum zero, so the flat constant does too.
  CHECK(std::abs(sol.lambda_bar) <= 1e-15);

  const ErgodicMfgCertificate& cert = sol.certificate;
  CHECK(cert.hj_ok);
  CHECK(cert.hj_residual <= 1e-8 * sol.value_solution.dt);
  CHECK(cert.speed_ok);
  CHECK(cert.support_speed <= 10.0 * h);
  CHECK(cert.fixed_point_ok);
  CHECK(cert.fixed_point_gap <= 2.0 * h);
  CHECK(cert.continuity_ok);
  CHECK(cert.continuity_residual <= 10.0 * h);
  CHECK(sol.fixed_point_residual == cert.fixed_point_gap);
  CHECK(sol.stationarity_residual == cert.continuity_residual);

  // The crowd spreads symmetrically between the two coupled wells.
  double mean = 0, mass = 0;
  for (int id = 0; id < grid.size(); ++id) {
    mean += grid.node(id).x * sol.m_bar.weight(id);
    mass += sol.m_bar.weight(id);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(mean) <= 2 * h);

  // Re-applying the map moves the averaged crowd by at most the gap bound.
  GridMeasure mapped = psi_map(model, cpl, sol.m_bar, -1.0, false);
  CHECK(wasserstein1(sol.m_bar, mapped) <= 2.0 * h + 1e-12);
}

TEST_CASE("independent starts agree on the constant and the coupling field") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(1.0, 1.0, true);
  ErgodicMfgOptions opts = tuned_options();

  ErgodicMfgSolution a =
      solve_ergodic_mfg(model, cpl, GridMeasure::uniform(grid), opts);
  ErgodicMfgSolution b = solve_ergodic_mfg(
      model, cpl, GridMeasure::dirac_at(grid, {0, 0}), opts);
  GridMeasure split = GridMeasure::mix(GridMeasure::dirac_at(grid, {-0.5, 0}),
                                       GridMeasure::dirac_at(grid, {0.5, 0}), 0.5);
  ErgodicMfgSolution c = solve_ergodic_mfg(model, cpl, split, opts);

  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(c.converged);

  for (const auto* pair : {&a, &b, &c}) {
    CHECK(std::abs(pair->lambda_bar) <= 1e-15);
  }
  UniquenessGaps ab = uniqueness_check(a, b, cpl);
  UniquenessGaps ac = uniqueness_check(a, c, cpl);
  CHECK(ab.lambda_gap <= 1e-12);
  CHECK(ac.lambda_gap <= 1e-12);
  CHECK(ab.coupling_gap <= 1e-3);
  CHECK(ac.coupling_gap <= 1e-3);
}

TEST_CASE("an unreachable tolerance is reported rather than masked") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model = quad_model(dom);
  Coupling cpl = Coupling::gaussian(1.0, 1.0, true);

  ErgodicMfgOptions opts = tuned_options();
  opts.tol = 1e-14;
  opts.max_iter = 40;
  ErgodicMfgSolution sol =
      solve_ergodic_mfg(model, cpl, GridMeasure::uniform(grid), opts);
  CHECK(!sol.converged);
  CHECK(sol.iterations == 40);

  opts.throw_on_failure = true;
  CHECK_THROWS_AS((void)solve_ergodic_mfg(model, cpl,
                                          GridMeasure::uniform(grid), opts),
                  NoConvergence);
}

TEST_CASE("without coupling the equilibrium is the static minimiser measure") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model = quad_model(dom);

  ErgodicMfgSolution sol = solve_ergodic_mfg(
      model, Coupling::none(), GridMeasure::uniform(grid), tuned_options());
  CHECK(sol.converged);
  // The damped update leaves a geometric remnant of the flat start on every
  // node, but essentially all mass has drained into the well bottom.
  auto support = sol.m_bar.support(1e-3);
  REQUIRE(support.size() == 1);
  CHECK(grid.node(support[0]).x == 0.0);
  CHECK(sol.m_bar.weight(support[0]) >= 0.95);
  // Unnormalised rest cost bottoms out at zero here as well.
  CHECK(std::abs(sol.lambda_bar) <= 1e-12);
}
