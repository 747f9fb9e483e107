#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mfg/errors.hpp"
#include "mfg/geometry.hpp"
#include "mfg/model.hpp"

using namespace mfg;

namespace {

PotentialSpec quad_spec(double coeff = 0.5) {
  PotentialSpec s(1);
  s[0].kind = PotentialTerm::Kind::quadratic;
  s[0].center = {0, 0};
  s[0].coeff = coeff;
  return s;
}

}  // namespace

TEST_CASE("potential term family values and gradients") {
  PotentialSpec s(5);
  s[0] = {PotentialTerm::Kind::quadratic, {1, 0}, 0.5, 1.0};
  s[1] = {PotentialTerm::Kind::gaussian, {0, 0}, 2.0, 0.5};
  s[2] = {PotentialTerm::Kind::constant, {0, 0}, 0.3, 1.0};
  s[3] = {PotentialTerm::Kind::radial_well, {0, 0}, 1.0, 0.25};
  s[4] = {PotentialTerm::Kind::flat_well, {0, 0}, 1.0, 0.2};

  const Vec2 x{0.6, 0.0};
  const double expect = 0.5 * 0.16 + 2.0 * std::exp(-0.36 / 0.25) + 0.3 +
                        (0.6 - 0.25) * (0.6 - 0.25) +
                        (0.6 - 0.2) * (0.6 - 0.2);
  CHECK(potential_value(s, x) == doctest::Approx(expect));

  // Flat well is flat inside its plateau.
  PotentialSpec flat(1);
  flat[0] = {PotentialTerm::Kind::flat_well, {0, 0}, 1.0, 0.2};
  CHECK(potential_value(flat, {0.1, 0}) == 0.0);
  CHECK(potential_gradient(flat, {0.15, 0}).x == 0.0);
  CHECK(potential_value(flat, {0.5, 0}) == doctest::Approx(0.09));

  // Gradients against central differences.
  const double eps = 1e-6;
  for (double px : {-0.7, -0.1, 0.35, 0.8}) {
    const Vec2 g = potential_gradient(s, {px, 0});
    const double fd = (potential_value(s, {px + eps, 0}) -
                       potential_value(s, {px - eps, 0})) /
                      (2 * eps);
    CHECK(g.x == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("kinetic model evaluates the separable pieces") {
  Domain dom = Domain::interval(-1, 1);
  TonelliModel model = make_kinetic_model(dom, quad_spec());
  REQUIRE(model.separable.has_value());
  CHECK(model.reversible);

  const Vec2 x{0.4, 0}, v{1.5, 0};
  CHECK(model.L(x, v) == doctest::Approx(0.5 * 2.25 + 0.5 * 0.16));
  CHECK(model.dL_dv(x, v).x == doctest::Approx(1.5));
  CHECK(model.dL_dx(x, v).x == doctest::Approx(0.4));
  CHECK(model.separable->kinetic(4.0) == doctest::Approx(2.0));

  // Quadratic kinetic energy dualises to H = |p|^2/2 - W.
  const Vec2 p{0.8, 0};
  CHECK(model.H(x, p) == doctest::Approx(0.5 * 0.64 - 0.5 * 0.16));
  CHECK(model.dH_dp(x, p).x == doctest::Approx(0.8));
}

TEST_CASE("quartic kinetic term dualises through the Newton inversion") {
  Domain dom = Domain::interval(-1, 1);
  TonelliModel model = make_kinetic_model(dom, quad_spec(), 0.25);

  // k(s) = s^2/2 + s^4/4, so k'(s) = s + s^3 and p = v + v^3 at the optimum.
  const Vec2 x{0.0, 0}, v{0.3, 0};
  const double p = 0.3 + 0.027;
  const double expect_h = p * 0.3 - model.L(x, v);
  CHECK(model.H(x, {p, 0}) == doctest::Approx(expect_h).epsilon(1e-9));
  CHECK(model.dH_dp(x, {p, 0}).x == doctest::Approx(0.3).epsilon(1e-9));

  auto [value, vel] = legendre_hamiltonian(model, x, {p, 0});
  CHECK(value == doctest::Approx(expect_h).epsilon(1e-9));
  CHECK(vel.x == doctest::Approx(0.3).epsilon(1e-9));

  // Frozen dual of s^2/2 + s^4 at p = 0.3, evaluated where the potential
  // vanishes so the value is the bare Legendre transform.
  TonelliModel unit = make_kinetic_model(dom, quad_spec(), 1.0);
  CHECK(unit.H({0.0, 0}, {0.3, 0}) ==
        doctest::Approx(0.0398887614).epsilon(1e-8));
}

TEST_CASE("legendre transform round trip on the plain quadratic") {
  Domain dom = Domain::interval(-1, 1);
  TonelliModel model = make_kinetic_model(dom, quad_spec());
  for (double pv : {-1.2, -0.4, 0.0, 0.9, 2.3}) {
    auto [value, vel] = legendre_hamiltonian(model, {0.2, 0}, {pv, 0});
    CHECK(vel.x == doctest::Approx(pv));
    CHECK(value == doctest::Approx(model.H({0.2, 0}, {pv, 0})));
  }
}

TEST_CASE("structural constants envelope the Lagrangian") {
  Domain dom = Domain::interval(-1, 1);
  TonelliModel model = make_kinetic_model(dom, quad_spec(), 0.1);
  const auto& c = model.constants;
  CHECK(c.beta >= 0.5);
  CHECK(c.alpha >= 0.0);
  CHECK(c.c1 >= 1.0);
  for (double xv : {-1.0, 0.0, 0.7}) {
    for (double vv : {0.0, 0.5, 2.0, 5.0}) {
      const double lv = model.L({xv, 0}, {vv, 0});
      CHECK(lv >= vv * vv / (4 * c.beta) - c.alpha - 1e-12);
      CHECK(lv <= 4 * c.beta * vv * vv + c.alpha + 1e-12);
    }
  }
}

TEST_CASE("grid measure constructors and support") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 21);

  GridMeasure u = GridMeasure::uniform(grid);
  double total = 0;
  for (double w : u.weights()) total += w;
  CHECK(total == doctest::Approx(1.0));
  CHECK(u.support().size() == 21);

  GridMeasure d = GridMeasure::dirac_at(grid, {0.52, 0});
  CHECK(d.support().size() == 1);
  CHECK(grid.node(d.support()[0]).x == doctest::Approx(0.5));

  GridMeasure m = GridMeasure::mix(u, d, 0.5);
  CHECK(m.weight(d.support()[0]) == doctest::Approx(0.5 + 0.5 / 21));

  CHECK_THROWS_AS(GridMeasure(&grid, std::vector<double>(21, 0.5)), Error);
  std::vector<double> neg(21, 1.0 / 19);
  neg[0] = -1.0 / 19;
  CHECK_THROWS_AS(GridMeasure(&grid, neg), Error);
}

TEST_CASE("gaussian coupling matches the kernel sum") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 41);
  Coupling cpl = Coupling::gaussian(0.5, 2.0);

  GridMeasure m = GridMeasure::mix(GridMeasure::dirac_at(grid, {-0.5, 0}),
                                   GridMeasure::dirac_at(grid, {0.25, 0}), 0.4);
  const Vec2 x{0.1, 0};
  const double exact =
      2.0 * (0.6 * std::exp(-0.36 / 0.25) + 0.4 * std::exp(-0.0225 / 0.25));
  CHECK(cpl.eval(x, m) == doctest::Approx(exact));

  // The tabulated kernel agrees with direct evaluation at the nodes and on
  // the half lattice.
  CouplingKernel kernel(cpl, grid);
  std::vector<double> nodes, half;
  kernel.eval_nodes(m, nodes);
  kernel.eval_half_lattice(m, half);
  REQUIRE(static_cast<int>(nodes.size()) == grid.size());
  REQUIRE(static_cast<int>(half.size()) == grid.half_nx() * grid.half_ny());
  for (int id = 0; id < grid.size(); id += 7) {
    CHECK(nodes[id] == doctest::Approx(cpl.eval(grid.node(id), m)));
  }
  for (int k = 1; k < grid.half_nx(); k += 9) {
    CHECK(half[k] == doctest::Approx(cpl.eval(grid.half_point(k, 0), m)));
  }
}

TEST_CASE("frozen-measure Lagrangian folds coupling and normalisation") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 161);
  TonelliModel base = make_kinetic_model(dom, quad_spec());
  GridMeasure d0 = GridMeasure::dirac_at(grid, {0, 0});

  // Kernel at sigma = 1 reduces to exp(-x^2) against a point mass at zero.
  Coupling cpl = Coupling::gaussian(1.0, 1.0, true);
  CHECK(cpl.eval({0.5, 0}, d0) == doctest::Approx(std::exp(-0.25)));

  const double kappa = cpl.a3_constant(base, d0);
  CHECK(kappa == doctest::Approx(0.5 * std::log(2.0) + 0.5).epsilon(1e-4));

  TonelliModel coupled = mean_field_lagrangian(base, cpl, d0);
  const Vec2 x{0.3, 0};
  CHECK(coupled.L(x, {0, 0}) ==
        doctest::Approx(0.5 * 0.09 + std::exp(-0.09) - kappa));
  CHECK(coupled.H(x, {0.2, 0}) ==
        doctest::Approx(base.H(x, {0.2, 0}) - std::exp(-0.09) + kappa));

  // Normalised rest cost has minimum zero over the nodes.
  double rest_min = 1e300;
  for (int id = 0; id < grid.size(); ++id) {
    rest_min = std::min(rest_min, coupled.L(grid.node(id), {0, 0}));
  }
  CHECK(rest_min == doctest::Approx(0.0).epsilon(1e-12));

  // Without normalisation the constant is zero.
  Coupling raw = Coupling::gaussian(1.0, 1.0, false);
  CHECK(raw.a3_constant(base, d0) == 0.0);
}

TEST_CASE("gaussian coupling is monotone, profile coupling can fail") {
  Domain dom = Domain::interval(-1, 1);
  Grid grid = Grid::make(dom, 81);
  GridMeasure a = GridMeasure::dirac_at(grid, {-0.4, 0});
  GridMeasure b = GridMeasure::mix(GridMeasure::dirac_at(grid, {0.3, 0}),
                                   GridMeasure::uniform(grid), 0.3);

  Coupling gauss = Coupling::gaussian(0.5, 1.0);
  MonotonicityResult mono = check_coupling_monotonicity(gauss, a, b);
  CHECK(mono.pairing >= -1e-12);
  CHECK(mono.quadratic > 0.0);

  // f(x) g(m) with g sign-sensitive violates the pairing inequality.
  Coupling profile = Coupling::separable_profile(
      [](Vec2 x) { return x.x; },
      [](const GridMeasure& m) {
        double mean = 0;
        for (int id = 0; id < m.grid().size(); ++id) {
          mean += m.weight(id) * m.grid().node(id).x;
        }
        return -mean;
      });
  MonotonicityResult bad = check_coupling_monotonicity(profile, a, b);
  CHECK(bad.pairing < 0.0);
}

TEST_CASE("coupling kernel requires matching grids") {
  Domain dom = Domain::interval(-1, 1);
  Grid g1 = Grid::make(dom, 21);
  Grid g2 = Grid::make(dom, 41);
  GridMeasure m1 = GridMeasure::uniform(g1);
  GridMeasure m2 = GridMeasure::uniform(g2);
  CHECK_THROWS_AS((void)wasserstein1(m1, m2), GridMismatch);
  CHECK_THROWS_AS((void)check_coupling_monotonicity(Coupling::gaussian(), m1, m2),
                  GridMismatch);
}
