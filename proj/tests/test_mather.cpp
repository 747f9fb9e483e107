#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "mfg/errors.hpp"
#include "mfg/geometry.hpp"
#include "mfg/hjsolver.hpp"
#include "mfg/mather.hpp"
#include "mfg/model.hpp"

using namespace mfg;

namespace {

TonelliModel model_with(const Domain& dom, PotentialTerm term) {
  PotentialSpec spec(1);
  spec[0] = term;
  return make_kinetic_model(dom, spec);
}

}  // namespace

TEST_CASE("quadratic well rests on a single node at its bottom") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::quadratic, {0, 0}, 0.5, 1.0});

  MatherData data = mather_set(model, grid);
  REQUIRE(data.nodes.size() == 1);
  CHECK(grid.node(data.nodes[0]).x == 0.0);
  CHECK(data.min_value == 0.0);
  CHECK(data.critical_value == 0.0);
  CHECK(data.measure.weight(data.nodes[0]) == 1.0);
  CHECK(data.padded_min <= data.min_value);
  // One lattice cell away the quadratic already exceeds the capture band.
  const double h = grid.spacing();
  CHECK(0.5 * h * h > data.tol_static);
  CHECK(data.tol_static == default_static_tolerance(grid));
}

TEST_CASE("capture tolerance widens with the tolerance argument") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::quadratic, {0, 0}, 0.5, 1.0});

  // All nodes with 0.5 x^2 <= 0.01, that is |x| <= sqrt(0.02) ~ 0.1414.
  MatherData wide = mather_set(model, grid, 0.01);
  CHECK(wide.nodes.size() == 23);
  double mass = 0;
  for (int id : wide.nodes) {
    CHECK(std::abs(grid.node(id).x) <= 0.1415);
    mass += wide.measure.weight(id);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("off-lattice minimiser is pinned to its nearest node") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::quadratic, {0.31, 0}, 0.5, 1.0});

  MatherData data = mather_set(model, grid);
  REQUIRE(data.nodes.size() == 1);
  CHECK(grid.node(data.nodes[0]).x == doctest::Approx(0.3125));
  CHECK(data.min_value == doctest::Approx(0.5 * 0.0025 * 0.0025));
  CHECK(data.critical_value == -data.min_value);
}

TEST_CASE("double well carries two symmetric nodes") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::radial_well, {0, 0}, 0.5, 0.5});

  MatherData data = mather_set(model, grid);
  REQUIRE(data.nodes.size() == 2);
  CHECK(grid.node(data.nodes[0]).x == doctest::Approx(-0.5));
  CHECK(grid.node(data.nodes[1]).x == doctest::Approx(0.5));
  CHECK(data.measure.weight(data.nodes[0]) == 0.5);
  CHECK(data.measure.weight(data.nodes[1]) == 0.5);

  const double h = grid.spacing();
  ErgodicSolution sol = ergodic_solve(model, grid, 2.0 * std::sqrt(h));
  MatherReport report = mather_measure_check(data, sol, model);
  CHECK(report.speed_ok);
  CHECK(report.max_support_speed <= 10.0 * h);
  CHECK(report.lift_injective);
  CHECK(report.lipschitz_ok);
  CHECK(report.max_pair_slope <= report.k2);
  CHECK(report.action_ok);
  CHECK(std::abs(report.action_excess) <= data.tol_static);
}

TEST_CASE("flat bottom fills its whole plateau") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::flat_well, {0, 0}, 1.0, 0.2});

  MatherData data = mather_set(model, grid);
  // Nodes at spacing 0.0125 covering [-0.2, 0.2] inclusive.
  CHECK(data.nodes.size() == 33);
  std::set<int> support(data.nodes.begin(), data.nodes.end());
  for (int id = 0; id < grid.size(); ++id) {
    const bool inside = std::abs(grid.node(id).x) <= 0.2 + 1e-12;
    CHECK(support.count(id) == static_cast<size_t>(inside ? 1 : 0));
  }

  const double h = grid.spacing();
  ErgodicSolution sol = ergodic_solve(model, grid, 2.0 * std::sqrt(h));
  MatherReport report = mather_measure_check(data, sol, model);
  CHECK(report.speed_ok);
  CHECK(report.lift_injective);
  CHECK(report.action_ok);
}

TEST_CASE("minimiser escaping the domain trips the qualification check") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::quadratic, {3, 0}, 0.5, 1.0});
  CHECK_THROWS_AS((void)mather_set(model, grid), ConstraintQualificationFailed);
}

TEST_CASE("boundary minimiser passes when the padded search agrees") {
  // Potential drops toward the wall but its true minimum is the wall itself,
  // so constraining changes nothing and the set is the boundary node.
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::quadratic, {1, 0}, 0.5, 1.0});
  MatherData data = mather_set(model, grid);
  REQUIRE(data.nodes.size() == 1);
  CHECK(grid.node(data.nodes[0]).x == doctest::Approx(1.0));
  CHECK(data.padded_min == doctest::Approx(data.min_value).epsilon(1e-12));
}

TEST_CASE("planar disc well rests at the centre") {
  Domain dom = Domain::disc({0, 0}, 1.0);
  Grid grid = Grid::make(dom, 41);
  TonelliModel model =
      model_with(dom, {PotentialTerm::Kind::quadratic, {0, 0}, 0.5, 1.0});

  MatherData data = mather_set(model, grid);
  REQUIRE(data.nodes.size() == 1);
  CHECK(norm(grid.node(data.nodes[0])) <= 1e-12);

  const double h = grid.spacing();
  ErgodicSolution sol = ergodic_solve(model, grid, 2.0 * std::sqrt(h));
  MatherReport report = mather_measure_check(data, sol, model);
  CHECK(report.speed_ok);
  CHECK(report.action_ok);
}
