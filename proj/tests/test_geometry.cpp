#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mfg/errors.hpp"
#include "mfg/geometry.hpp"

using namespace mfg;

TEST_CASE("interval basics") {
  Domain dom = Domain::interval(-1.0, 1.0);
  CHECK(dom.kind() == DomainKind::interval);
  CHECK(dom.dim() == 1);
  CHECK(dom.diameter() == doctest::Approx(2.0));
  CHECK(dom.centroid().x == doctest::Approx(0.0));
  CHECK(dom.volume() == doctest::Approx(2.0));
  CHECK(dom.chord_constant() == 1.0);

  CHECK(dom.signed_distance({0.25, 0}) == doctest::Approx(-0.75));
  CHECK(dom.signed_distance({1.0, 0}) == doctest::Approx(0.0));
  CHECK(dom.signed_distance({1.5, 0}) == doctest::Approx(0.5));
  CHECK(dom.contains({-1.0, 0}));
  CHECK(!dom.contains({-1.1, 0}));
  CHECK(dom.outer_distance({0.3, 0}) == 0.0);
  CHECK(dom.outer_distance({-1.2, 0}) == doctest::Approx(0.2));
}

TEST_CASE("interval gradient and projection") {
  Domain dom = Domain::interval(0.0, 2.0);
  CHECK(dom.distance_gradient({1.8, 0}).x == doctest::Approx(1.0));
  CHECK(dom.distance_gradient({0.1, 0}).x == doctest::Approx(-1.0));
  Vec2 p = dom.project({2.0 + 0.5 * dom.tube_radius(), 0});
  CHECK(p.x == doctest::Approx(2.0));
  CHECK_THROWS_AS((void)dom.project({2.0 + 2.0 * dom.tube_radius(), 0}),
                  TubeExceeded);
  CHECK(!dom.near_box_corner({2.0, 0}, 1e-6));
}

TEST_CASE("box distances and corners") {
  Domain dom = Domain::box({0, 0}, {2, 1});
  CHECK(dom.dim() == 2);
  CHECK(dom.diameter() == doctest::Approx(std::sqrt(5.0)));
  CHECK(dom.volume() == doctest::Approx(2.0));
  CHECK(dom.centroid().x == doctest::Approx(1.0));
  CHECK(dom.centroid().y == doctest::Approx(0.5));

  CHECK(dom.signed_distance({1.0, 0.5}) == doctest::Approx(-0.5));
  CHECK(dom.signed_distance({1.0, 0.1}) == doctest::Approx(-0.1));
  // Outside beyond a corner the distance is the diagonal one.
  CHECK(dom.signed_distance({2.3, 1.4}) ==
        doctest::Approx(std::sqrt(0.09 + 0.16)));

  Vec2 g = dom.distance_gradient({1.0, 0.95});
  CHECK(g.x == doctest::Approx(0.0));
  CHECK(g.y == doctest::Approx(1.0));

  CHECK(dom.near_box_corner({2.0, 1.0}, 1e-9));
  CHECK(dom.near_box_corner({1.999, 0.001}, 1e-2));
  CHECK(!dom.near_box_corner({1.0, 1.0}, 1e-3));

  Vec2 p = dom.project({1.0, 1.0 + 0.5 * dom.tube_radius()});
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(1.0));
}

TEST_CASE("disc distances") {
  Domain dom = Domain::disc({1, 1}, 2.0);
  CHECK(dom.dim() == 2);
  CHECK(dom.diameter() == doctest::Approx(4.0));
  CHECK(dom.volume() == doctest::Approx(4.0 * 3.14159265358979));
  CHECK(dom.disc_center() == Vec2{1, 1});
  CHECK(dom.disc_radius() == 2.0);

  CHECK(dom.signed_distance({1, 1}) == doctest::Approx(-2.0));
  CHECK(dom.signed_distance({3, 1}) == doctest::Approx(0.0));
  CHECK(dom.signed_distance({1, 4}) == doctest::Approx(1.0));

  Vec2 g = dom.distance_gradient({1.0, 2.5});
  CHECK(g.x == doctest::Approx(0.0));
  CHECK(g.y == doctest::Approx(1.0));

  Vec2 p = dom.project({1.0, 3.0 + 0.4 * dom.tube_radius()});
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(3.0));

  CHECK(dom.bounds_lo().x == doctest::Approx(-1.0));
  CHECK(dom.bounds_hi().y == doctest::Approx(3.0));
}

TEST_CASE("distance gradient is a unit vector in the smooth tube") {
  Domain box = Domain::box({-1, -1}, {1, 1});
  Domain disc = Domain::disc({0, 0}, 1.0);
  const std::vector<Vec2> probes = {
      {0.9, 0.2}, {-0.85, 0.3}, {0.1, -0.95}, {0.6, 0.6}};
  for (const Domain& dom : {box, disc}) {
    for (Vec2 p : probes) {
      if (dom.signed_distance(p) < -dom.tube_radius()) continue;
      CHECK(norm(dom.distance_gradient(p)) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("feasible path is a straight segment with unit-speed duration") {
  Domain dom = Domain::box({0, 0}, {4, 2});
  FeasiblePath path = feasible_path(dom, {0.5, 0.5}, {3.5, 1.5}, 7);
  CHECK(path.samples.size() == 7);
  CHECK(path.duration == doctest::Approx(norm(Vec2{3.0, 1.0})));
  CHECK(path.samples.front() == Vec2{0.5, 0.5});
  CHECK(path.samples.back() == Vec2{3.5, 1.5});
  // Constant speed: consecutive gaps are equal.
  const double gap = norm(path.samples[1] - path.samples[0]);
  for (size_t i = 1; i + 1 < path.samples.size(); ++i) {
    CHECK(norm(path.samples[i + 1] - path.samples[i]) == doctest::Approx(gap));
  }
  for (Vec2 s : path.samples) CHECK(dom.contains(s, 1e-9));

  CHECK_THROWS_AS((void)feasible_path(dom, {0.5, 0.5}, {5.0, 0.5}), Error);
}

TEST_CASE("coincident endpoints give a zero-duration path") {
  Domain dom = Domain::interval(-1, 1);
  FeasiblePath path = feasible_path(dom, {0.25, 0}, {0.25, 0}, 5);
  CHECK(path.duration == 0.0);
  for (Vec2 s : path.samples) CHECK(s.x == doctest::Approx(0.25));
}

TEST_CASE("distance chain rule along a curve leaving the domain") {
  Domain dom = Domain::interval(-1.0, 1.0);
  // x(t) = 0.5 + t crosses the boundary at t = 0.5; past it the distance
  // grows at exactly the outward speed.
  const double dt = 1e-3;
  std::vector<Vec2> samples;
  for (int k = 0; k <= 1000; ++k) {
    samples.push_back({0.5 + dt * k, 0.0});
  }
  const double defect = distance_derivative_defect(dom, samples, dt);
  CHECK(defect <= 10.0 * dt);
}

TEST_CASE("distance chain rule on a disc orbit") {
  Domain dom = Domain::disc({0, 0}, 1.0);
  // A circle of radius 1.2 stays at constant outer distance 0.2, so the
  // tangential motion must register a zero derivative.
  const double dt = 1e-3;
  std::vector<Vec2> samples;
  for (int k = 0; k <= 600; ++k) {
    const double a = 0.3 * dt * k;
    samples.push_back({1.2 * std::cos(a), 1.2 * std::sin(a)});
  }
  const double defect = distance_derivative_defect(dom, samples, dt);
  CHECK(defect <= 1e-2);
}
