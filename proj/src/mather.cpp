#include "mfg/mather.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/errors.hpp"

namespace mfg {

double default_static_tolerance(const Grid& grid) {
  const double h = grid.spacing();
  return h * h * h + 1e-12;
}

MatherData mather_set(const TonelliModel& model, const Grid& grid,
                      double tol_static) {
  if (tol_static < 0) tol_static = default_static_tolerance(grid);

  double min_value = std::numeric_limits<double>::infinity();
  for (int id = 0; id < grid.size(); ++id) {
    min_value = std::min(min_value, model.L(grid.node(id), {0, 0}));
  }

  // Search the rest cost over a box extending the domain by twice its
  // diameter, on a lattice continuing the grid spacing. Coercive potentials
  // make the bounded search equivalent to an unbounded one.
  const double pad = 2.0 * grid.domain().diameter();
  const double h = grid.spacing();
  const Vec2 lo = grid.domain().bounds_lo(), hi = grid.domain().bounds_hi();
  const int ext = static_cast<int>(std::ceil(pad / h));
  const int mx = static_cast<int>(std::lround((hi.x - lo.x) / h));
  const int my = grid.domain().dim() == 2
                     ? static_cast<int>(std::lround((hi.y - lo.y) / h))
                     : 0;
  const int ey = grid.domain().dim() == 2 ? ext : 0;
  double padded_min = std::numeric_limits<double>::infinity();
  for (int iy = -ey; iy <= my + ey; ++iy) {
    for (int ix = -ext; ix <= mx + ext; ++ix) {
      const Vec2 p{lo.x + ix * h, grid.domain().dim() == 2 ? lo.y + iy * h : 0.0};
      padded_min = std::min(padded_min, model.L(p, {0, 0}));
    }
  }
  if (padded_min < min_value - tol_static) {
    throw ConstraintQualificationFailed(
        "rest cost attains " + std::to_string(padded_min) +
        " outside the domain versus " + std::to_string(min_value) +
        " inside; the static minimizer escapes the constraint set");
  }

  std::vector<int> nodes;
  for (int id = 0; id < grid.size(); ++id) {
    if (model.L(grid.node(id), {0, 0}) <= min_value + tol_static) {
      nodes.push_back(id);
    }
  }

  std::vector<double> w(static_cast<size_t>(grid.size()), 0.0);
  for (int id : nodes) w[static_cast<size_t>(id)] = 1.0 / nodes.size();

  return MatherData{nodes,
                    min_value,
                    -min_value,
                    GridMeasure(&grid, std::move(w)),
                    padded_min,
                    tol_static};
}

MatherReport mather_measure_check(const MatherData& data,
                                  const ErgodicSolution& sol,
                                  const TonelliModel& model,
                                  double speed_tol) {
  const Grid& grid = *sol.u.grid;
  if (speed_tol < 0) speed_tol = 10.0 * grid.spacing();

  MatherReport rep;
  rep.k2 = model.constants.c1;

  std::vector<Vec2> velocities, gradients;
  velocities.reserve(data.nodes.size());
  for (int id : data.nodes) {
    Vec2 p, v;
    if (grid.is_boundary(id)) {
      const auto bg = boundary_gradient(model, grid, sol.u, id, sol.c);
      p = bg.p;
      v = model.dH_dp(grid.node(id), p);
    } else {
      const auto gv = gradient_and_velocity(model, grid, sol.u, id);
      p = gv.gradient;
      v = gv.velocity;
    }
    gradients.push_back(p);
    velocities.push_back(v);
    rep.max_support_speed = std::max(rep.max_support_speed, norm(v));
  }
  rep.speed_ok = rep.max_support_speed <= speed_tol;

  // The phase-space lift keeps the base point, so two support nodes collide
  // only if they are the same node; checked against the full lifted pair to
  // keep the statement honest.
  rep.lift_injective = true;
  for (size_t i = 0; i < data.nodes.size(); ++i) {
    for (size_t j = i + 1; j < data.nodes.size(); ++j) {
      const Vec2 xi = grid.node(data.nodes[i]), xj = grid.node(data.nodes[j]);
      if (xi == xj && velocities[i] == velocities[j]) {
        rep.lift_injective = false;
      }
      const double gap = norm(xi - xj);
      if (gap > 0) {
        rep.max_pair_slope = std::max(
            rep.max_pair_slope, norm(gradients[i] - gradients[j]) / gap);
      }
    }
  }
  rep.lipschitz_ok = rep.max_pair_slope <= rep.k2;

  for (int id : data.nodes) {
    rep.action_excess = std::max(
        rep.action_excess, model.L(grid.node(id), {0, 0}) + sol.c);
  }
  rep.action_ok = rep.action_excess <=
                  data.tol_static + std::abs(sol.c - data.critical_value);
  return rep;
}

}  // namespace mfg
