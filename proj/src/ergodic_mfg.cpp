#include "mfg/ergodic_mfg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

#include "mfg/errors.hpp"

namespace mfg {

GridMeasure psi_map(const TonelliModel& model, const Coupling& coupling,
                    const GridMeasure& m, double tol_static,
                    bool lipschitz_selection) {
  const TonelliModel coupled = mean_field_lagrangian(model, coupling, m);
  const MatherData data = mather_set(coupled, m.grid(), tol_static);
  if (!lipschitz_selection) return data.measure;
  std::vector<double> w(static_cast<size_t>(m.grid().size()), 0.0);
  w[static_cast<size_t>(data.nodes.front())] = 1.0;
  return GridMeasure(&m.grid(), std::move(w));
}

namespace {

// Velocity of the stationary field at a node, through the one-sided
// boundary stencil where central differences are unavailable. Box corners
// have no outward normal and contribute nothing.
bool node_velocity(const TonelliModel& model, const Grid& grid,
                   const ValueField& u, double c, int id, Vec2& out) {
  if (grid.is_boundary(id)) {
    try {
      const auto bg = boundary_gradient(model, grid, u, id, c);
      out = model.dH_dp(grid.node(id), bg.p);
      return true;
    } catch (const CornerNode&) {
      return false;
    }
  }
  out = gradient_and_velocity(model, grid, u, id).velocity;
  return true;
}

// Interior nodes suitable as bump centers: at least three cells from the
// boundary so the bump support stays inside the open domain. Nodes carrying
// mass are taken first, so the basis always probes the crowd itself, and the
// remaining budget is spread evenly over the rest of the deep interior.
std::vector<int> bump_centers(const Grid& grid, const GridMeasure& m,
                              double cut, int target) {
  std::vector<int> deep;
  const double margin = 3.0 * grid.spacing() * (1.0 - 1e-9);
  for (int id = 0; id < grid.size(); ++id) {
    if (-grid.domain().signed_distance(grid.node(id)) >= margin) {
      deep.push_back(id);
    }
  }
  if (static_cast<int>(deep.size()) <= target) return deep;
  std::vector<char> taken(deep.size(), 0);
  std::vector<int> centers;
  centers.reserve(static_cast<size_t>(target));
  for (size_t i = 0; i < deep.size(); ++i) {
    if (static_cast<int>(centers.size()) >= target) break;
    if (m.weight(deep[i]) >= cut) {
      centers.push_back(deep[i]);
      taken[i] = 1;
    }
  }
  const int rest = target - static_cast<int>(centers.size());
  for (int j = 0; j < rest; ++j) {
    const size_t pos = static_cast<size_t>(
        std::llround((j + 1) * (deep.size() - 1.0) / (rest + 1)));
    if (!taken[pos]) {
      centers.push_back(deep[pos]);
      taken[pos] = 1;
    }
  }
  return centers;
}

Vec2 bump_gradient(Vec2 x, Vec2 center, double radius, int dim) {
  const double sx = (x.x - center.x) / radius;
  const double sy = dim == 2 ? (x.y - center.y) / radius : 0.0;
  if (std::abs(sx) >= 1.0 || std::abs(sy) >= 1.0) return {0, 0};
  const double px = 1.0 - sx * sx, py = 1.0 - sy * sy;
  Vec2 g{-6.0 * sx * px * px / radius * (dim == 2 ? py * py * py : 1.0), 0.0};
  if (dim == 2) g.y = -6.0 * sy * py * py / radius * px * px * px;
  return g;
}

}  // namespace

ErgodicMfgSolution solve_ergodic_mfg(const TonelliModel& model,
                                     const Coupling& coupling,
                                     const GridMeasure& m_init,
                                     const ErgodicMfgOptions& opts) {
  const Grid& grid = m_init.grid();
  const int n = grid.size();
  const double h = grid.spacing();

  std::vector<double> w = m_init.weights();
  std::deque<std::vector<double>> tail;
  std::vector<double> trace;
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    const GridMeasure cur(&grid, w);
    const GridMeasure next =
        psi_map(model, coupling, cur, opts.tol_static, opts.lipschitz_selection);
    for (int i = 0; i < n; ++i) {
      const double delta = next.weight(i) - w[static_cast<size_t>(i)];
      w[static_cast<size_t>(i)] += opts.damping * delta;
    }
    tail.push_back(w);
    if (static_cast<int>(tail.size()) > std::max(1, opts.tail_window)) {
      tail.pop_front();
    }
    trace.push_back(wasserstein1(cur, GridMeasure(&grid, w)));
    if (trace.back() <= opts.tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  // Average the trailing iterates, but never reach back into the opening
  // transient when the loop stopped early.
  const int usable = std::max(1, std::min<int>(static_cast<int>(tail.size()),
                                               std::max(1, iter / 2)));
  std::vector<double> avg(static_cast<size_t>(n), 0.0);
  for (int j = 0; j < usable; ++j) {
    const auto& snap = tail[tail.size() - 1 - static_cast<size_t>(j)];
    for (int i = 0; i < n; ++i) avg[static_cast<size_t>(i)] += snap[static_cast<size_t>(i)];
  }
  for (double& v : avg) v /= usable;

  ErgodicMfgSolution sol{.m_bar = GridMeasure(&grid, std::move(avg))};
  sol.d1_trace = std::move(trace);
  sol.iterations = iter;
  sol.converged = converged;
  if (!converged && opts.throw_on_failure) {
    throw NoConvergence("equilibrium map iteration stalled at step size " +
                        std::to_string(sol.d1_trace.back()) + " after " +
                        std::to_string(iter) + " sweeps");
  }

  const GridMeasure psi_bar = psi_map(model, coupling, sol.m_bar,
                                      opts.tol_static, opts.lipschitz_selection);
  sol.fixed_point_residual = wasserstein1(sol.m_bar, psi_bar);

  const TonelliModel coupled = mean_field_lagrangian(model, coupling, sol.m_bar);
  double rest_min = std::numeric_limits<double>::infinity();
  for (int id = 0; id < n; ++id) {
    rest_min = std::min(rest_min, coupled.L(grid.node(id), {0, 0}));
  }
  sol.lambda_bar = 0.0 - rest_min;  // avoids a negative zero in reports

  // The velocity lattice of the value solve has pitch h/dt. Near the flat
  // bottom of the effective potential the numerical gradient lands on half a
  // pitch, so dt is kept large enough that this quantization stays well
  // inside the certificate's speed budget.
  const double dt = opts.dt > 0 ? opts.dt : 4.0 * std::sqrt(h);
  ErgodicOptions eopts;
  eopts.tol = opts.ergodic_tol;
  eopts.max_iter = opts.ergodic_max_iter;
  eopts.speed_cap = opts.speed_cap;
  eopts.threads = opts.threads;
  eopts.throw_on_failure = opts.throw_on_failure;
  sol.value_solution = ergodic_solve(coupled, grid, dt, eopts);
  sol.u_bar = sol.value_solution.u;

  // Certificate. Velocities are evaluated once per carried node and reused
  // for the support bound and the continuity pairing.
  std::unordered_map<int, Vec2> velocity;
  for (int id = 0; id < n; ++id) {
    if (sol.m_bar.weight(id) <= 1e-12) continue;
    Vec2 v{0, 0};
    if (node_velocity(coupled, grid, sol.u_bar, sol.value_solution.c, id, v)) {
      velocity[id] = v;
    }
  }

  auto& cert = sol.certificate;
  cert.hj_residual = sol.value_solution.residual;
  cert.hj_ok = sol.value_solution.converged &&
               cert.hj_residual <= opts.ergodic_tol * dt;
  for (const auto& [id, v] : velocity) {
    if (sol.m_bar.weight(id) >= opts.support_cut) {
      cert.support_speed = std::max(cert.support_speed, norm(v));
    }
  }
  cert.speed_ok = cert.support_speed <= 10.0 * h;
  cert.fixed_point_gap = sol.fixed_point_residual;
  cert.fixed_point_ok = cert.fixed_point_gap <= 2.0 * h;

  const double radius = 3.0 * h;
  for (int c : bump_centers(grid, sol.m_bar, opts.support_cut, 25)) {
    const Vec2 xc = grid.node(c);
    double pairing = 0.0;
    for (const auto& [id, v] : velocity) {
      const Vec2 g = bump_gradient(grid.node(id), xc, radius,
                                   grid.domain().dim());
      pairing += dot(g, v) * sol.m_bar.weight(id);
    }
    cert.continuity_residual = std::max(cert.continuity_residual,
                                        std::abs(pairing));
  }
  cert.continuity_ok = cert.continuity_residual <= 10.0 * h;
  sol.stationarity_residual = cert.continuity_residual;
  return sol;
}

UniquenessGaps uniqueness_check(const ErgodicMfgSolution& a,
                                const ErgodicMfgSolution& b,
                                const Coupling& coupling) {
  const Grid& grid = a.m_bar.grid();
  UniquenessGaps gaps;
  gaps.lambda_gap = std::abs(a.lambda_bar - b.lambda_bar);
  const CouplingKernel kernel(coupling, grid);
  std::vector<double> fa, fb;
  kernel.eval_nodes(a.m_bar, fa);
  kernel.eval_nodes(b.m_bar, fb);
  for (int id = 0; id < grid.size(); ++id) {
    gaps.coupling_gap = std::max(
        gaps.coupling_gap, std::abs(fa[static_cast<size_t>(id)] -
                                    fb[static_cast<size_t>(id)]));
  }
  return gaps;
}

}  // namespace mfg
